#pragma once

#include <cstdint>
#include <vector>

namespace hio
{

using Token = int;
using Tokens = std::vector<Token>;

// Token ids: 0..n_objects-1 are objects, then PERIOD, then BOS.
struct Vocab
{
	int n_objects = 0;

	Token period() const { return n_objects; }
	Token bos() const { return n_objects + 1; }
	int size() const { return n_objects + 2; }
	bool is_object(Token t) const { return t >= 0 && t < n_objects; }
};

struct Scene
{
	std::uint64_t id = 0;
	std::vector<int> objects; // sorted, unique

	bool contains(int object) const;
	bool operator==(const Scene &) const = default;
};

struct CaptionExample
{
	std::uint64_t scene_id = 0;
	Tokens tokens; // object ids followed by exactly one PERIOD

	bool operator==(const CaptionExample &) const = default;
};

// Structural checks shared by several modules.
void validate_scene(const Scene & scene, const Vocab & vocab);
bool is_well_formed_caption(const Tokens & tokens, const Vocab & vocab);

} // namespace hio
