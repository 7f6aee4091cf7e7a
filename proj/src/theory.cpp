#include "hio/theory.hpp"

#include <algorithm>

#include "hio/error.hpp"

namespace hio
{

void validate_instance(const TheoryInstance & inst)
{
	const auto n = inst.base.size();
	if (inst.amplified.size() != n)
		throw Error("invalid-instance", "base and amplified logits differ in length");
	if (!inst.base.allFinite() || !inst.amplified.allFinite())
		throw Error("invalid-instance", "non-finite logits");
	if (inst.halluc_idx.empty() || inst.correct_idx.empty())
		throw Error("invalid-instance", "hallucinated and correct sets must be non-empty");
	if (!(inst.alpha >= 0) || !std::isfinite(inst.alpha))
		throw Error("invalid-instance", "alpha must be finite and non-negative");
	for (int i : inst.halluc_idx)
	{
		if (i < 0 || i >= n)
			throw Error("invalid-instance", "hallucinated index out of range");
		if (std::find(inst.correct_idx.begin(), inst.correct_idx.end(), i) != inst.correct_idx.end())
			throw Error("invalid-instance", "hallucinated and correct sets overlap");
	}
	for (int j : inst.correct_idx)
		if (j < 0 || j >= n)
			throw Error("invalid-instance", "correct index out of range");
}

LogitVector contrast_delta(const TheoryInstance & inst)
{
	validate_instance(inst);
	return contrast_step(inst.base, inst.amplified, inst.alpha);
}

ExactWitness exact_condition(const TheoryInstance & inst)
{
	const LogitVector delta = contrast_delta(inst);
	ExactWitness w;
	w.halluc_argmax = inst.halluc_idx.front();
	for (int i : inst.halluc_idx)
		if (delta(i) > delta(w.halluc_argmax))
			w.halluc_argmax = i;
	w.correct_argmin = inst.correct_idx.front();
	for (int j : inst.correct_idx)
		if (delta(j) < delta(w.correct_argmin))
			w.correct_argmin = j;
	w.halluc_max = delta(w.halluc_argmax);
	w.correct_min = delta(w.correct_argmin);
	w.holds = w.halluc_max < w.correct_min;
	return w;
}

NecessaryMargins necessary_condition(const TheoryInstance & inst, int j)
{
	validate_instance(inst);
	if (inst.alpha == 0.0)
		throw Error("alpha-zero-undefined", "J is undefined at alpha = 0");
	if (std::find(inst.correct_idx.begin(), inst.correct_idx.end(), j) == inst.correct_idx.end())
		throw Error("invalid-argument", "j must be a correct index");
	NecessaryMargins out;
	double base_gap = 0.0;
	for (int i : inst.halluc_idx)
	{
		out.lhs += inst.amplified(i) - inst.amplified(j);
		base_gap += inst.base(i) - inst.base(j);
	}
	out.J = (1.0 + inst.alpha) / inst.alpha * base_gap;
	out.holds = out.lhs > out.J;
	return out;
}

double AuditReport::exact_fraction() const
{
	return evaluated_steps == 0 ? 0.0 : static_cast<double>(exact_count) / evaluated_steps;
}

double AuditReport::necessary_fraction() const
{
	return evaluated_steps == 0 ? 0.0 : static_cast<double>(necessary_count) / evaluated_steps;
}

AuditReport audit_trace(const std::vector<TraceStep> & trace, const Scene & scene, const CaptionExample & reference,
	const Vocab & vocab, double alpha)
{
	AuditReport report;
	std::vector<char> mentioned(vocab.n_objects, 0);
	for (const TraceStep & entry : trace)
	{
		AuditStep row;
		row.step = entry.step;
		row.chosen = entry.chosen;
		row.is_hallucination = vocab.is_object(entry.chosen) && !scene.contains(entry.chosen);

		TheoryInstance inst{entry.base, entry.amplified, {}, {}, alpha};
		for (int v = 0; v < vocab.n_objects; ++v)
		{
			if (!scene.contains(v))
				inst.halluc_idx.push_back(v);
			else if (!mentioned[v])
				inst.correct_idx.push_back(v);
		}
		if (inst.correct_idx.empty())
			inst.correct_idx.push_back(vocab.period());

		row.reference_token = inst.correct_idx.front();
		for (Token t : reference.tokens)
		{
			if (vocab.is_object(t) && scene.contains(t) && !mentioned[t])
			{
				row.reference_token = t;
				break;
			}
		}

		if (inst.halluc_idx.empty())
		{
			row.vacuous = true;
			++report.vacuous_steps;
		}
		else
		{
			row.exact_ok = exact_condition(inst).holds;
			if (alpha > 0)
			{
				const NecessaryMargins m = necessary_condition(inst, row.reference_token);
				row.necessary_ok = m.holds;
				row.lhs = m.lhs;
				row.J = m.J;
			}
			++report.evaluated_steps;
			report.exact_count += row.exact_ok ? 1 : 0;
			report.necessary_count += row.necessary_ok ? 1 : 0;
		}
		if (vocab.is_object(entry.chosen))
			mentioned[entry.chosen] = 1;
		report.steps.push_back(row);
	}
	return report;
}

void merge_into(AuditReport & total, const AuditReport & part)
{
	total.steps.insert(total.steps.end(), part.steps.begin(), part.steps.end());
	total.vacuous_steps += part.vacuous_steps;
	total.evaluated_steps += part.evaluated_steps;
	total.exact_count += part.exact_count;
	total.necessary_count += part.necessary_count;
}

} // namespace hio
