#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hio/losses.hpp"
#include "hio/training.hpp"
#include "hio/world.hpp"

namespace hio
{

struct WorldSection
{
	int n_objects = 24;
	int group_size = 4;
	double affinity = 1.5;
	double cooc_noise = 0.1;
	double popularity_skew = 0.5;
	int scene_size_min = 2;
	int scene_size_max = 4;
	double bias_rate = 0.3;
	int train_scenes = 2000;
	int eval_scenes = 500;
	int probes_per_scene = 3;

	bool operator==(const WorldSection &) const = default;
};

struct LossSection
{
	LossKind kind = LossKind::hio;
	double alpha = 1.0;
	double beta = 0.1;
	double gamma = 0.1;
	int top_k = 5;
	double corrupt_prob = 0.5;

	bool operator==(const LossSection &) const = default;
};

struct DecodeSection
{
	int max_len = 10;
	double temperature = 1.0;

	bool operator==(const DecodeSection &) const = default;
};

struct RunConfig
{
	std::uint64_t seed = 7;
	WorldSection world;
	OptimConfig train_base;
	double init_scale = 0.0;
	OptimConfig train_evil;
	LossSection loss;
	DecodeSection decode;
	std::string out = "runs/default";

	RunConfig();
	bool operator==(const RunConfig & other) const;

	WorldSpec world_spec() const;
	LossConfig loss_config() const { return {loss.beta, loss.gamma, loss.kind}; }
};

RunConfig parse_config_text(const std::string & text, const std::string & source = "<config>");
RunConfig parse_config(const std::filesystem::path & path);
void validate_config(const RunConfig & cfg);

// Fully resolved TOML; parse_config_text(echo_config(c)) == c.
std::string echo_config(const RunConfig & cfg);
std::string config_hash(const RunConfig & cfg);

} // namespace hio
