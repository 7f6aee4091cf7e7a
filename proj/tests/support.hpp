#pragma once

#include <functional>
#include <string>

#include "hio/error.hpp"

// Error code thrown by f, or "" when it returns normally.
inline std::string code_of(const std::function<void()> & f)
{
	try
	{
		f();
	}
	catch (const hio::Error & e)
	{
		return e.code();
	}
	return "";
}
