#include "hio/types.hpp"

#include <algorithm>

#include "hio/error.hpp"

namespace hio
{

bool Scene::contains(int object) const
{
	return std::binary_search(objects.begin(), objects.end(), object);
}

void validate_scene(const Scene & scene, const Vocab & vocab)
{
	if (scene.objects.empty())
		throw Error("invalid-scene", "scene has no objects");
	for (std::size_t i = 0; i < scene.objects.size(); ++i)
	{
		if (!vocab.is_object(scene.objects[i]))
			throw Error("world-mismatch", "scene object id " + std::to_string(scene.objects[i]) + " outside the world");
		if (i > 0 && scene.objects[i] <= scene.objects[i - 1])
			throw Error("invalid-scene", "scene objects must be sorted and unique");
	}
}

bool is_well_formed_caption(const Tokens & tokens, const Vocab & vocab)
{
	if (tokens.empty() || tokens.back() != vocab.period())
		return false;
	return std::all_of(tokens.begin(), tokens.end() - 1, [&](Token t) { return vocab.is_object(t); });
}

} // namespace hio
