#include "hio/rng.hpp"

#include <cmath>
#include <numbers>

#include "hio/error.hpp"

namespace hio
{

std::uint64_t splitmix64(std::uint64_t x)
{
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes)
{
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (unsigned char ch : bytes)
	{
		h ^= ch;
		h *= 0x100000001b3ULL;
	}
	return h;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index)
{
	return splitmix64(splitmix64(root ^ fnv1a64(tag)) + index);
}

double Rng::uniform()
{
	return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n)
{
	if (n == 0)
		throw Error("invalid-argument", "Rng::below(0)");
	const std::uint64_t threshold = (0 - n) % n;
	for (;;)
	{
		const std::uint64_t x = engine_();
		if (x >= threshold)
			return x % n;
	}
}

std::size_t Rng::categorical(std::span<const double> weights)
{
	double total = 0.0;
	for (double w : weights)
		total += w;
	if (!(total > 0.0) || !std::isfinite(total))
		throw Error("invalid-argument", "categorical weights must have a positive finite sum");
	const double u = uniform() * total;
	double cum = 0.0;
	std::size_t last_positive = 0;
	for (std::size_t i = 0; i < weights.size(); ++i)
	{
		if (weights[i] <= 0.0)
			continue;
		cum += weights[i];
		last_positive = i;
		if (u < cum)
			return i;
	}
	return last_positive;
}

double Rng::normal()
{
	double u1 = uniform();
	while (u1 <= 0.0)
		u1 = uniform();
	const double u2 = uniform();
	return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace hio
