#pragma once

#include <span>
#include <string>
#include <vector>

#include "hio/model.hpp"
#include "hio/types.hpp"

namespace hio
{

// One mined hallucination: y_l shares y_w's first d tokens, then emits h where
// y_w has the target token c.
struct Candidate
{
	Tokens y_l;
	int d = 0;
	Token h = 0;
	Token c = 0;

	bool operator==(const Candidate &) const = default;
};

struct PreferenceRecord
{
	Scene scene;
	Tokens y_w;
	std::vector<Candidate> candidates;

	bool operator==(const PreferenceRecord &) const = default;
};

void validate_record(const PreferenceRecord & record, const Vocab & vocab);

enum class LossKind
{
	dpo,
	cbtm,
	amth,
	hio
};

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string & name);

struct LossConfig
{
	double beta = 0.1;
	double gamma = 0.1;
	LossKind kind = LossKind::hio;
};

void validate_loss_config(const LossConfig & cfg);

struct LossValue
{
	double value = 0.0;
	Gradient grad;
};

// exp(r_w) / (exp(r_w) + exp(r_l)).
double bt_prob(double r_w, double r_l);

double log_ratio(const ModelParams & policy, const ModelParams & reference, const Scene & scene, std::span<const Token> seq);

// Forward preference (y_w over the first candidate), the standard baseline.
LossValue dpo_loss(const ModelParams & policy, const ModelParams & reference, const PreferenceRecord & record, double beta);

// p(preferred > other) with implicit rewards beta * log_ratio.
double cbtm_prob(const ModelParams & policy, const ModelParams & reference, const Scene & scene,
	std::span<const Token> preferred, std::span<const Token> other, double beta);
// Reversed preference p(y_l > y_w) for one candidate of a record.
double cbtm_prob(const ModelParams & policy, const ModelParams & reference, const PreferenceRecord & record,
	std::size_t candidate, double beta);

// -log of the reversed preference for the first candidate only.
LossValue cbtm_loss(const ModelParams & policy, const ModelParams & reference, const PreferenceRecord & record, double beta);

// -sum over candidates of log sigma(beta * (log_ratio(y_l) - log_ratio(y_w))).
LossValue amth_loss(const ModelParams & policy, const ModelParams & reference, const PreferenceRecord & record, double beta);

// Mean raw policy logit along the hallucinated continuation y_l[d..] minus the
// raw logit of the target token c at the divergence step.
LossValue aci_margin(const ModelParams & policy, const Scene & scene, const Candidate & candidate);

// amth_loss minus gamma times the summed candidate margins.
LossValue hio_loss(const ModelParams & policy, const ModelParams & reference, const PreferenceRecord & record,
	double beta, double gamma);

LossValue record_loss(
	const ModelParams & policy, const ModelParams & reference, const PreferenceRecord & record, const LossConfig & cfg);

struct BatchLoss
{
	double value = 0.0;
	Gradient grad;
	double mean_margin = 0.0; // over every candidate in the batch
};

// Arithmetic mean of record losses, reduced in the given record order.
BatchLoss batch_loss(const ModelParams & policy, const ModelParams & reference,
	std::span<const PreferenceRecord> records, const LossConfig & cfg);

double mean_cbtm_prob(const ModelParams & policy, const ModelParams & reference,
	std::span<const PreferenceRecord> records, double beta);

} // namespace hio
