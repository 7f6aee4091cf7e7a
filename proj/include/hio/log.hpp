#pragma once

#include <spdlog/spdlog.h>

#include <memory>

namespace hio
{

// Shared stderr logger; data never goes through it.
std::shared_ptr<spdlog::logger> logger();

} // namespace hio
