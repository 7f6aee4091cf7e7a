#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace hio
{

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

// Seed for an independent named stream derived from a root seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index = 0);

// mt19937_64 is bit-specified by the standard; the std distributions are not,
// so all draws go through the helpers below to stay reproducible everywhere.
class Rng
{
public:
	explicit Rng(std::uint64_t seed) : engine_(seed) {}

	std::uint64_t next_u64() { return engine_(); }

	// Uniform in [0, 1) with 53 random bits.
	double uniform();
	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
	// Uniform integer in [0, n); n > 0.
	std::uint64_t below(std::uint64_t n);
	bool bernoulli(double p) { return uniform() < p; }
	// Index drawn with probability proportional to weights (non-negative, positive sum).
	std::size_t categorical(std::span<const double> weights);
	double normal();

	template <typename T>
	void shuffle(std::vector<T> & items)
	{
		for (std::size_t i = items.size(); i > 1; --i)
		{
			const auto j = static_cast<std::size_t>(below(i));
			std::swap(items[i - 1], items[j]);
		}
	}

private:
	std::mt19937_64 engine_;
};

} // namespace hio
