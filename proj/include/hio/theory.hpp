#pragma once

#include <string>
#include <vector>

#include "hio/decoding.hpp"
#include "hio/numerics.hpp"

namespace hio
{

// Paired base / amplified logits with disjoint hallucinated and correct
// token sets, the input to both decodability conditions.
struct TheoryInstance
{
	LogitVector base;
	LogitVector amplified;
	std::vector<int> halluc_idx;
	std::vector<int> correct_idx;
	double alpha = 1.0;
};

void validate_instance(const TheoryInstance & inst);

LogitVector contrast_delta(const TheoryInstance & inst);

struct ExactWitness
{
	bool holds = false;
	int halluc_argmax = -1;
	double halluc_max = 0.0;
	int correct_argmin = -1;
	double correct_min = 0.0;
};

// max over hallucinated delta < min over correct delta (strict).
ExactWitness exact_condition(const TheoryInstance & inst);

struct NecessaryMargins
{
	bool holds = false;
	double lhs = 0.0; // sum_i (amp_i - amp_j) over hallucinated i
	double J = 0.0;   // (1 + alpha) / alpha * sum_i (base_i - base_j)
};

// Sum of amplified gaps to correct token j must exceed J. Implied by the exact
// condition for every correct j; not sufficient for it.
NecessaryMargins necessary_condition(const TheoryInstance & inst, int j);

struct AuditStep
{
	int step = 0;
	Token chosen = 0;
	bool is_hallucination = false;
	bool vacuous = false;
	bool exact_ok = false;
	bool necessary_ok = false;
	int reference_token = -1;
	double lhs = 0.0;
	double J = 0.0;
};

struct AuditReport
{
	std::vector<AuditStep> steps;
	int vacuous_steps = 0;
	int evaluated_steps = 0;
	int exact_count = 0;
	int necessary_count = 0;

	double exact_fraction() const;
	double necessary_fraction() const;
};

// Labels every step of a contrastive decode trace: absent objects are
// hallucinatory; unmentioned scene objects are correct (PERIOD once every
// scene object has been mentioned). j is the first reference token not yet
// mentioned, or PERIOD.
AuditReport audit_trace(const std::vector<TraceStep> & trace, const Scene & scene, const CaptionExample & reference,
	const Vocab & vocab, double alpha);

void merge_into(AuditReport & total, const AuditReport & part);

} // namespace hio
