#pragma once

#include <stdexcept>
#include <string>

namespace hio
{

// Every failure carries a stable machine-readable code ("invalid-spec",
// "bad-sequence", ...) plus free-form detail.
class Error : public std::runtime_error
{
public:
	explicit Error(std::string code, const std::string & detail = {})
		: std::runtime_error(detail.empty() ? code : code + ": " + detail), code_(std::move(code))
	{
	}

	const std::string & code() const noexcept { return code_; }

private:
	std::string code_;
};

} // namespace hio
