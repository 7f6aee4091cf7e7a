#include "hio/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace hio
{

std::shared_ptr<spdlog::logger> logger()
{
	static auto instance = [] {
		auto l = spdlog::stderr_color_mt("hio");
		l->set_pattern("[%H:%M:%S] [%l] %v");
		return l;
	}();
	return instance;
}

} // namespace hio
