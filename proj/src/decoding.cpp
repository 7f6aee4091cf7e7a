#include "hio/decoding.hpp"

#include <cmath>

#include "hio/error.hpp"
#include "hio/numerics.hpp"

namespace hio
{

LogitSource LogitSource::base(const ModelParams & params)
{
	return LogitSource(SourceKind::base, &params);
}

LogitSource LogitSource::corrupted_scene(const ModelParams & params, Scene corrupted, double drop_prob)
{
	LogitSource source(SourceKind::corrupted_scene, &params);
	source.corrupted_ = std::move(corrupted);
	source.drop_prob_ = drop_prob;
	return source;
}

LogitSource LogitSource::evil_model(const ModelParams & evil)
{
	return LogitSource(SourceKind::evil_model, &evil);
}

LogitVector LogitSource::logits(const Scene & scene, std::span<const Token> prefix) const
{
	if (kind_ == SourceKind::corrupted_scene)
		return step_logits(*params_, *corrupted_, prefix);
	return step_logits(*params_, scene, prefix);
}

void validate_decode_config(const DecodeConfig & cfg)
{
	if (!std::isfinite(cfg.alpha) || cfg.alpha < 0)
		throw Error("invalid-config", "alpha must be finite and non-negative");
	if (cfg.max_len < 2)
		throw Error("invalid-config", "max_len must be at least 2");
	if (cfg.mode == DecodeMode::sample && !(cfg.temperature > 0))
		throw Error("invalid-config", "temperature must be positive");
}

Token argmax_token(const LogitVector & logits, const Vocab & vocab)
{
	Token best = -1;
	for (Token t = 0; t < static_cast<Token>(logits.size()); ++t)
	{
		if (t == vocab.bos())
			continue;
		if (best < 0 || logits(t) > logits(best))
			best = t;
	}
	return best;
}

namespace
{

Token sample_token(const LogitVector & logits, double temperature, Rng & rng)
{
	const ProbVector probs = softmax((logits / temperature).eval());
	return static_cast<Token>(rng.categorical(std::span<const double>(probs.data(), probs.size())));
}

Token choose(const LogitVector & logits, const Vocab & vocab, const DecodeConfig & cfg, Rng * rng)
{
	if (cfg.mode == DecodeMode::greedy)
		return argmax_token(logits, vocab);
	return sample_token(logits, cfg.temperature, *rng);
}

} // namespace

Tokens greedy_extend(const ModelParams & params, const Scene & scene, std::span<const Token> prefix, int max_new)
{
	if (max_new < 1)
		throw Error("invalid-argument", "greedy_extend needs max_new >= 1");
	const Vocab vocab = params.vocab();
	Tokens context(prefix.begin(), prefix.end());
	Tokens suffix;
	for (int step = 0; step < max_new; ++step)
	{
		Token next = argmax_token(step_logits(params, scene, context), vocab);
		if (step + 1 == max_new)
			next = vocab.period();
		context.push_back(next);
		suffix.push_back(next);
		if (next == vocab.period())
			break;
	}
	return suffix;
}

CaptionExample greedy_decode(const ModelParams & params, const Scene & scene, int max_len)
{
	if (max_len < 2)
		throw Error("invalid-config", "max_len must be at least 2");
	return {scene.id, greedy_extend(params, scene, {}, max_len)};
}

CaptionExample sample_decode(const ModelParams & params, const Scene & scene, const DecodeConfig & cfg, Rng & rng)
{
	DecodeConfig sampled = cfg;
	sampled.mode = DecodeMode::sample;
	validate_decode_config(sampled);
	const Vocab vocab = params.vocab();
	CaptionExample caption{scene.id, {}};
	for (int step = 0; step < cfg.max_len; ++step)
	{
		Token next = sample_token(step_logits(params, scene, caption.tokens), cfg.temperature, rng);
		if (step + 1 == cfg.max_len)
			next = vocab.period();
		caption.tokens.push_back(next);
		if (next == vocab.period())
			break;
	}
	return caption;
}

DecodeResult contrastive_decode(
	const ModelParams & base_params, const LogitSource & source, const Scene & scene, const DecodeConfig & cfg)
{
	validate_decode_config(cfg);
	if (source.kind() == SourceKind::evil_model && &source.params() == &base_params)
		throw Error("same-params", "evil-model source must bind params distinct from the base model");
	if (source.params().n_objects != base_params.n_objects)
		throw Error("world-mismatch", "contrast source is bound to a different world");

	const Vocab vocab = base_params.vocab();
	Rng rng(cfg.seed);
	DecodeResult result;
	result.caption.scene_id = scene.id;
	Tokens & prefix = result.caption.tokens;
	for (int step = 0; step < cfg.max_len; ++step)
	{
		TraceStep entry;
		entry.step = step;
		entry.base = step_logits(base_params, scene, prefix);
		entry.amplified = source.logits(scene, prefix);
		entry.delta = contrast_step(entry.base, entry.amplified, cfg.alpha);
		entry.chosen = choose(entry.delta, vocab, cfg, &rng);
		if (step + 1 == cfg.max_len)
			entry.chosen = vocab.period();
		prefix.push_back(entry.chosen);
		result.trace.push_back(std::move(entry));
		if (prefix.back() == vocab.period())
			break;
	}
	return result;
}

} // namespace hio
