#include "hio/losses.hpp"

#include <cmath>

#include "hio/error.hpp"
#include "hio/numerics.hpp"

namespace hio
{

void validate_record(const PreferenceRecord & record, const Vocab & vocab)
{
	validate_scene(record.scene, vocab);
	if (!is_well_formed_caption(record.y_w, vocab))
		throw Error("bad-record", "y_w is not a well-formed caption");
	if (record.candidates.empty())
		throw Error("bad-record", "record has no candidates");
	for (const Candidate & cand : record.candidates)
	{
		if (!is_well_formed_caption(cand.y_l, vocab))
			throw Error("bad-record", "candidate is not a well-formed caption");
		const auto d = static_cast<std::size_t>(cand.d);
		if (cand.d < 0 || d >= cand.y_l.size() || d >= record.y_w.size())
			throw Error("bad-record", "divergence position out of range");
		if (!std::equal(cand.y_l.begin(), cand.y_l.begin() + cand.d, record.y_w.begin()))
			throw Error("bad-record", "candidate does not share y_w's prefix");
		if (cand.y_l[d] != cand.h || record.y_w[d] != cand.c || cand.h == cand.c)
			throw Error("bad-record", "candidate divergence metadata inconsistent");
	}
}

std::string to_string(LossKind kind)
{
	switch (kind)
	{
	case LossKind::dpo: return "dpo";
	case LossKind::cbtm: return "cbtm";
	case LossKind::amth: return "amth";
	case LossKind::hio: return "hio";
	}
	return "hio";
}

LossKind loss_kind_from_string(const std::string & name)
{
	if (name == "dpo")
		return LossKind::dpo;
	if (name == "cbtm")
		return LossKind::cbtm;
	if (name == "amth")
		return LossKind::amth;
	if (name == "hio")
		return LossKind::hio;
	throw Error("invalid-argument", "unknown loss kind '" + name + "'");
}

void validate_loss_config(const LossConfig & cfg)
{
	if (!(cfg.beta > 0) || !std::isfinite(cfg.beta))
		throw Error("invalid-config", "beta must be positive");
	if (!(cfg.gamma >= 0) || !std::isfinite(cfg.gamma))
		throw Error("invalid-config", "gamma must be non-negative");
}

double bt_prob(double r_w, double r_l)
{
	return std::exp(log_sigmoid(r_w - r_l));
}

double log_ratio(const ModelParams & policy, const ModelParams & reference, const Scene & scene, std::span<const Token> seq)
{
	return sequence_log_prob(policy, scene, seq) - sequence_log_prob(reference, scene, seq);
}

namespace
{

// -log sigma(beta * (ratio(first) - ratio(second))) for one pair, accumulated.
double pair_term(const ModelParams & policy, const ModelParams & reference, const Scene & scene,
	std::span<const Token> first, std::span<const Token> second, double beta, Gradient & grad)
{
	const double z = beta * (log_ratio(policy, reference, scene, first) - log_ratio(policy, reference, scene, second));
	// d(-log sigma(z))/dz = -sigma(-z)
	const double dz = -sigmoid(-z);
	accumulate_sequence_log_prob(policy, scene, first, &grad, dz * beta);
	accumulate_sequence_log_prob(policy, scene, second, &grad, -dz * beta);
	return -log_sigmoid(z);
}

} // namespace

LossValue dpo_loss(const ModelParams & policy, const ModelParams & reference, const PreferenceRecord & record, double beta)
{
	LossValue out{0.0, ModelParams::zeros(policy.n_objects)};
	out.value = pair_term(policy, reference, record.scene, record.y_w, record.candidates.at(0).y_l, beta, out.grad);
	return out;
}

double cbtm_prob(const ModelParams & policy, const ModelParams & reference, const Scene & scene,
	std::span<const Token> preferred, std::span<const Token> other, double beta)
{
	return bt_prob(beta * log_ratio(policy, reference, scene, preferred), beta * log_ratio(policy, reference, scene, other));
}

double cbtm_prob(const ModelParams & policy, const ModelParams & reference, const PreferenceRecord & record,
	std::size_t candidate, double beta)
{
	return cbtm_prob(policy, reference, record.scene, record.candidates.at(candidate).y_l, record.y_w, beta);
}

LossValue cbtm_loss(const ModelParams & policy, const ModelParams & reference, const PreferenceRecord & record, double beta)
{
	LossValue out{0.0, ModelParams::zeros(policy.n_objects)};
	out.value = pair_term(policy, reference, record.scene, record.candidates.at(0).y_l, record.y_w, beta, out.grad);
	return out;
}

LossValue amth_loss(const ModelParams & policy, const ModelParams & reference, const PreferenceRecord & record, double beta)
{
	LossValue out{0.0, ModelParams::zeros(policy.n_objects)};
	for (const Candidate & cand : record.candidates)
		out.value += pair_term(policy, reference, record.scene, cand.y_l, record.y_w, beta, out.grad);
	return out;
}

LossValue aci_margin(const ModelParams & policy, const Scene & scene, const Candidate & candidate)
{
	const auto d = static_cast<std::size_t>(candidate.d);
	if (candidate.d < 0 || d >= candidate.y_l.size())
		throw Error("empty-continuation", "hallucinated continuation has no tokens");
	const Vocab vocab = policy.vocab();
	const std::span<const Token> seq(candidate.y_l);
	const auto m = static_cast<double>(seq.size() - d);

	LossValue out{0.0, ModelParams::zeros(policy.n_objects)};
	double continuation = 0.0;
	for (std::size_t t = d; t < seq.size(); ++t)
	{
		const Token prev = t == 0 ? vocab.bos() : seq[t - 1];
		continuation += step_logits(policy, scene, seq.first(t))(seq[t]);
		accumulate_logit_grad(out.grad, scene, prev, seq[t], 1.0 / m);
	}
	const Token prev = d == 0 ? vocab.bos() : seq[d - 1];
	const double target = step_logits(policy, scene, seq.first(d))(candidate.c);
	accumulate_logit_grad(out.grad, scene, prev, candidate.c, -1.0);
	out.value = continuation / m - target;
	return out;
}

LossValue hio_loss(const ModelParams & policy, const ModelParams & reference, const PreferenceRecord & record,
	double beta, double gamma)
{
	LossValue out = amth_loss(policy, reference, record, beta);
	if (gamma == 0.0)
		return out;
	double margin_sum = 0.0;
	for (const Candidate & cand : record.candidates)
	{
		LossValue margin = aci_margin(policy, record.scene, cand);
		margin_sum += margin.value;
		margin.grad *= -gamma;
		out.grad += margin.grad;
	}
	out.value -= gamma * margin_sum;
	return out;
}

LossValue record_loss(
	const ModelParams & policy, const ModelParams & reference, const PreferenceRecord & record, const LossConfig & cfg)
{
	switch (cfg.kind)
	{
	case LossKind::dpo: return dpo_loss(policy, reference, record, cfg.beta);
	case LossKind::cbtm: return cbtm_loss(policy, reference, record, cfg.beta);
	case LossKind::amth: return amth_loss(policy, reference, record, cfg.beta);
	case LossKind::hio: return hio_loss(policy, reference, record, cfg.beta, cfg.gamma);
	}
	throw Error("invalid-config", "unknown loss kind");
}

BatchLoss batch_loss(const ModelParams & policy, const ModelParams & reference,
	std::span<const PreferenceRecord> records, const LossConfig & cfg)
{
	if (records.empty())
		throw Error("invalid-argument", "batch_loss needs at least one record");
	BatchLoss out{0.0, ModelParams::zeros(policy.n_objects), 0.0};
	std::size_t n_candidates = 0;
	for (const PreferenceRecord & record : records)
	{
		LossValue term = record_loss(policy, reference, record, cfg);
		out.value += term.value;
		out.grad += term.grad;
		for (const Candidate & cand : record.candidates)
		{
			out.mean_margin += aci_margin(policy, record.scene, cand).value;
			++n_candidates;
		}
	}
	const double inv = 1.0 / static_cast<double>(records.size());
	out.value *= inv;
	out.grad *= inv;
	out.mean_margin /= static_cast<double>(n_candidates);
	return out;
}

double mean_cbtm_prob(const ModelParams & policy, const ModelParams & reference,
	std::span<const PreferenceRecord> records, double beta)
{
	double total = 0.0;
	std::size_t count = 0;
	for (const PreferenceRecord & record : records)
	{
		for (std::size_t i = 0; i < record.candidates.size(); ++i)
		{
			total += cbtm_prob(policy, reference, record, i, beta);
			++count;
		}
	}
	return count == 0 ? 0.0 : total / static_cast<double>(count);
}

} // namespace hio
