#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "hio/rng.hpp"
#include "hio/types.hpp"

namespace hio
{

struct WorldSpec
{
	int n_objects = 24;
	Eigen::MatrixXd cooc; // symmetric, zero diagonal, non-negative
	int scene_size_min = 2;
	int scene_size_max = 5;
	double bias_rate = 0.3;
	// Base popularity of object i is proportional to (i + 1)^-popularity_skew.
	double popularity_skew = 0.5;
	std::uint64_t seed = 0;
};

// Block co-occurrence structure: objects are split into consecutive groups of
// group_size; same-group pairs get `affinity`, every off-diagonal pair gets an
// extra uniform [0, noise) jitter drawn from `seed`.
Eigen::MatrixXd clustered_cooc(int n_objects, int group_size, double affinity, double noise, std::uint64_t seed);

class World
{
public:
	explicit World(WorldSpec spec);

	const WorldSpec & spec() const { return spec_; }
	const Vocab & vocab() const { return vocab_; }
	int n_objects() const { return spec_.n_objects; }
	const Eigen::VectorXd & base_weights() const { return base_weights_; }
	// Marginal P(object in scene) under sample_scene, estimated from a fixed
	// seeded stream of frequency_samples scenes.
	const Eigen::VectorXd & frequency() const { return frequency_; }
	// Summed co-occurrence affinity of every object with the scene's objects.
	Eigen::VectorXd affinity_to(const Scene & scene) const;

	Rng make_rng(std::string_view stream, std::uint64_t index = 0) const;

	static constexpr int frequency_samples = 20000;

private:
	WorldSpec spec_;
	Vocab vocab_;
	Eigen::VectorXd base_weights_;
	Eigen::VectorXd frequency_;
};

void validate_spec(const WorldSpec & spec);
World build_world(const WorldSpec & spec);

Scene sample_scene(const World & world, Rng & rng, std::uint64_t id = 0);
CaptionExample reference_caption(const Scene & scene, const Vocab & vocab, Rng & rng);
CaptionExample inject_bias(const CaptionExample & caption, const Scene & scene, const World & world, Rng & rng);
Scene corrupt_scene(const Scene & scene, double drop_prob, Rng & rng);

struct CorpusEntry
{
	Scene scene;
	CaptionExample biased;
	CaptionExample reference;

	bool operator==(const CorpusEntry &) const = default;
};

std::vector<CorpusEntry> gen_corpus(const World & world, int n_scenes, Rng & rng);

enum class ProbeMode
{
	random,
	popular,
	adversarial
};

std::string to_string(ProbeMode mode);
ProbeMode probe_mode_from_string(const std::string & name);

struct ProbeQuery
{
	std::uint64_t scene_id = 0;
	int object_id = 0;
	bool present = false;
	ProbeMode mode = ProbeMode::random;

	bool operator==(const ProbeQuery &) const = default;
};

std::vector<ProbeQuery> gen_probes(
	const World & world, const std::vector<Scene> & scenes, ProbeMode mode, int per_scene, Rng & rng);

} // namespace hio
