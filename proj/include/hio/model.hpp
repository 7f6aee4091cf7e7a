#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>

#include "hio/numerics.hpp"
#include "hio/types.hpp"

namespace hio
{

// Log-linear, scene-conditioned bigram caption model:
//   logit[t] = c[t] + B[prev][t] + sum_{v in scene} A[v][t]
// with the BOS logit pinned to bos_logit so BOS is never emitted.
struct ModelParams
{
	int n_objects = 0;
	Eigen::MatrixXd A; // n_objects x V
	Eigen::MatrixXd B; // V x V
	Eigen::VectorXd c; // V

	static ModelParams zeros(int n_objects);

	Vocab vocab() const { return Vocab{n_objects}; }
	int vocab_size() const { return n_objects + 2; }
	Eigen::Index parameter_count() const { return A.size() + B.size() + c.size(); }
	bool shapes_consistent() const;
	bool all_finite() const;

	Eigen::VectorXd pack() const;
	void unpack(const Eigen::Ref<const Eigen::VectorXd> & flat);

	ModelParams & operator+=(const ModelParams & other);
	ModelParams & operator*=(double scale);
	bool operator==(const ModelParams & other) const;
};

using Gradient = ModelParams;

inline constexpr double bos_logit = -1e9;

LogitVector step_logits(const ModelParams & params, const Scene & scene, std::span<const Token> prefix);

double sequence_log_prob(const ModelParams & params, const Scene & scene, std::span<const Token> seq);
Gradient grad_sequence_log_prob(const ModelParams & params, const Scene & scene, std::span<const Token> seq);

// Adds weight * d(log p(seq))/d(params) into grad (when non-null) and returns log p(seq).
double accumulate_sequence_log_prob(
	const ModelParams & params, const Scene & scene, std::span<const Token> seq, Gradient * grad, double weight);

// Adds weight * d(logit[token] at context (scene, prev))/d(params) into grad.
void accumulate_logit_grad(Gradient & grad, const Scene & scene, Token prev, Token token, double weight);

ModelParams init_params(int n_objects, double scale, std::uint64_t seed);
ModelParams clone_params(const ModelParams & params);

std::uint64_t params_checksum(const ModelParams & params);

} // namespace hio
