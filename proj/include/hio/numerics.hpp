#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>

#include "hio/error.hpp"

namespace hio
{

using LogitVector = Eigen::VectorXd;
using ProbVector = Eigen::VectorXd;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived> & values)
{
	return values.allFinite();
}

/// Stable log(sum(exp(v))) via the max shift.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived> & values)
{
	using Scalar = typename Derived::Scalar;
	if (values.size() == 0)
		throw Error("empty-input", "log_sum_exp of an empty list");
	// maxCoeff silently skips NaN, so check every entry.
	if (!values.allFinite())
		throw Error("non-finite", "log_sum_exp input contains NaN or Inf");
	const Scalar shift = values.maxCoeff();
	return shift + std::log((values.array() - shift).exp().sum());
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> log_softmax(const Eigen::MatrixBase<Derived> & logits)
{
	const auto lse = log_sum_exp(logits);
	return (logits.array() - lse).matrix();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived> & logits)
{
	if (!all_finite(logits))
		throw Error("non-finite", "softmax input contains NaN or Inf");
	return log_softmax(logits).array().exp().matrix();
}

/// log(sigmoid(x)) without overflow for large |x|.
template <typename Scalar>
Scalar log_sigmoid(Scalar x)
{
	if (x >= Scalar(0))
		return -std::log1p(std::exp(-x));
	return x - std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x)
{
	if (x >= Scalar(0))
		return Scalar(1) / (Scalar(1) + std::exp(-x));
	const Scalar e = std::exp(x);
	return e / (Scalar(1) + e);
}

/// Affine contrast of two logit streams: base + alpha * (base - amplified),
/// i.e. (1 + alpha) * base - alpha * amplified. Written in difference form so
/// alpha == 0 and base == amplified both return base bit-for-bit.
template <typename DerivedBase, typename DerivedAmp>
Eigen::Matrix<typename DerivedBase::Scalar, Eigen::Dynamic, 1> contrast_step(
	const Eigen::MatrixBase<DerivedBase> & base,
	const Eigen::MatrixBase<DerivedAmp> & amplified,
	typename DerivedBase::Scalar alpha)
{
	if (base.size() != amplified.size())
		throw Error("length-mismatch", "contrast_step operands differ in length");
	if (!(alpha >= 0) || !std::isfinite(alpha))
		throw Error("invalid-alpha", "alpha must be finite and non-negative");
	return base + alpha * (base - amplified);
}

} // namespace hio
