#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hio/model.hpp"
#include "hio/rng.hpp"
#include "hio/types.hpp"

namespace hio
{

enum class SourceKind
{
	base,
	corrupted_scene,
	evil_model
};

// Where the amplified logits of a contrastive step come from: the base model
// itself, the base model conditioned on a corrupted scene, or a separate
// (evil) model. Non-owning; the bound params must outlive the source.
class LogitSource
{
public:
	static LogitSource base(const ModelParams & params);
	static LogitSource corrupted_scene(const ModelParams & params, Scene corrupted, double drop_prob);
	static LogitSource evil_model(const ModelParams & evil);

	SourceKind kind() const { return kind_; }
	const ModelParams & params() const { return *params_; }
	double drop_prob() const { return drop_prob_; }
	const std::optional<Scene> & corrupted() const { return corrupted_; }

	LogitVector logits(const Scene & scene, std::span<const Token> prefix) const;

private:
	LogitSource(SourceKind kind, const ModelParams * params) : kind_(kind), params_(params) {}

	SourceKind kind_;
	const ModelParams * params_;
	std::optional<Scene> corrupted_;
	double drop_prob_ = 0.0;
};

enum class DecodeMode
{
	greedy,
	sample
};

struct DecodeConfig
{
	double alpha = 1.0;
	DecodeMode mode = DecodeMode::greedy;
	double temperature = 1.0;
	int max_len = 10;
	std::uint64_t seed = 0;
};

void validate_decode_config(const DecodeConfig & cfg);

struct TraceStep
{
	int step = 0;
	LogitVector base;
	LogitVector amplified;
	LogitVector delta;
	Token chosen = 0;
};

struct DecodeResult
{
	CaptionExample caption;
	std::vector<TraceStep> trace;
};

// Highest-logit non-BOS token, lowest id on ties.
Token argmax_token(const LogitVector & logits, const Vocab & vocab);

// Greedily extends prefix until PERIOD; at most max_new tokens are appended and
// the last one is forced to PERIOD if the budget runs out.
Tokens greedy_extend(const ModelParams & params, const Scene & scene, std::span<const Token> prefix, int max_new);

CaptionExample greedy_decode(const ModelParams & params, const Scene & scene, int max_len);
CaptionExample sample_decode(const ModelParams & params, const Scene & scene, const DecodeConfig & cfg, Rng & rng);

DecodeResult contrastive_decode(
	const ModelParams & base_params, const LogitSource & source, const Scene & scene, const DecodeConfig & cfg);

} // namespace hio
