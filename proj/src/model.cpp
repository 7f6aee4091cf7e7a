#include "hio/model.hpp"

#include <cstring>
#include <string>

#include "hio/error.hpp"
#include "hio/rng.hpp"

namespace hio
{

namespace
{

void check_bound(const ModelParams & params, const Scene & scene)
{
	if (!params.shapes_consistent())
		throw Error("world-mismatch", "parameter shapes inconsistent with n_objects");
	validate_scene(scene, params.vocab());
}

void check_prefix(const Vocab & vocab, std::span<const Token> prefix)
{
	for (std::size_t i = 0; i < prefix.size(); ++i)
	{
		const Token t = prefix[i];
		if (t < 0 || t >= vocab.size() || t == vocab.bos())
			throw Error("bad-sequence", "token " + std::to_string(t) + " not emittable");
		if (t == vocab.period() && i + 1 != prefix.size())
			throw Error("bad-sequence", "PERIOD before the end of the prefix");
	}
}

void check_sequence(const Vocab & vocab, std::span<const Token> seq)
{
	if (seq.empty() || seq.back() != vocab.period())
		throw Error("bad-sequence", "sequence must end with PERIOD");
	check_prefix(vocab, seq);
}

LogitVector raw_logits(const ModelParams & params, const Scene & scene, Token prev)
{
	LogitVector logits = params.c + params.B.row(prev).transpose();
	for (int v : scene.objects)
		logits += params.A.row(v).transpose();
	logits(params.vocab().bos()) = bos_logit;
	return logits;
}

} // namespace

ModelParams ModelParams::zeros(int n_objects)
{
	const int v = n_objects + 2;
	return {n_objects, Eigen::MatrixXd::Zero(n_objects, v), Eigen::MatrixXd::Zero(v, v), Eigen::VectorXd::Zero(v)};
}

bool ModelParams::shapes_consistent() const
{
	const int v = vocab_size();
	return n_objects >= 1 && A.rows() == n_objects && A.cols() == v && B.rows() == v && B.cols() == v && c.size() == v;
}

bool ModelParams::all_finite() const
{
	return A.allFinite() && B.allFinite() && c.allFinite();
}

Eigen::VectorXd ModelParams::pack() const
{
	Eigen::VectorXd flat(parameter_count());
	flat << A.reshaped(), B.reshaped(), c;
	return flat;
}

void ModelParams::unpack(const Eigen::Ref<const Eigen::VectorXd> & flat)
{
	if (flat.size() != parameter_count())
		throw Error("world-mismatch", "flat parameter vector has the wrong length");
	Eigen::Index offset = 0;
	A.reshaped() = flat.segment(offset, A.size());
	offset += A.size();
	B.reshaped() = flat.segment(offset, B.size());
	offset += B.size();
	c = flat.segment(offset, c.size());
}

ModelParams & ModelParams::operator+=(const ModelParams & other)
{
	A += other.A;
	B += other.B;
	c += other.c;
	return *this;
}

ModelParams & ModelParams::operator*=(double scale)
{
	A *= scale;
	B *= scale;
	c *= scale;
	return *this;
}

bool ModelParams::operator==(const ModelParams & other) const
{
	return n_objects == other.n_objects && A == other.A && B == other.B && c == other.c;
}

LogitVector step_logits(const ModelParams & params, const Scene & scene, std::span<const Token> prefix)
{
	check_bound(params, scene);
	check_prefix(params.vocab(), prefix);
	const Token prev = prefix.empty() ? params.vocab().bos() : prefix.back();
	return raw_logits(params, scene, prev);
}

double accumulate_sequence_log_prob(
	const ModelParams & params, const Scene & scene, std::span<const Token> seq, Gradient * grad, double weight)
{
	check_bound(params, scene);
	check_sequence(params.vocab(), seq);
	const Vocab vocab = params.vocab();
	double total = 0.0;
	Token prev = vocab.bos();
	for (const Token target : seq)
	{
		const LogitVector logits = raw_logits(params, scene, prev);
		const double lse = log_sum_exp(logits);
		total += logits(target) - lse;
		if (grad != nullptr)
		{
			// d log softmax(target) / d logits = onehot(target) - softmax
			Eigen::RowVectorXd delta = -(logits.array() - lse).exp().matrix().transpose();
			delta(target) += 1.0;
			delta(vocab.bos()) = 0.0;
			delta *= weight;
			grad->c += delta.transpose();
			grad->B.row(prev) += delta;
			for (int v : scene.objects)
				grad->A.row(v) += delta;
		}
		prev = target;
	}
	return total;
}

double sequence_log_prob(const ModelParams & params, const Scene & scene, std::span<const Token> seq)
{
	return accumulate_sequence_log_prob(params, scene, seq, nullptr, 1.0);
}

Gradient grad_sequence_log_prob(const ModelParams & params, const Scene & scene, std::span<const Token> seq)
{
	Gradient grad = ModelParams::zeros(params.n_objects);
	accumulate_sequence_log_prob(params, scene, seq, &grad, 1.0);
	return grad;
}

void accumulate_logit_grad(Gradient & grad, const Scene & scene, Token prev, Token token, double weight)
{
	if (token == grad.vocab().bos())
		return;
	grad.c(token) += weight;
	grad.B(prev, token) += weight;
	for (int v : scene.objects)
		grad.A(v, token) += weight;
}

ModelParams init_params(int n_objects, double scale, std::uint64_t seed)
{
	if (!(scale >= 0.0))
		throw Error("invalid-argument", "init scale must be non-negative");
	ModelParams params = ModelParams::zeros(n_objects);
	if (scale == 0.0)
		return params;
	Rng rng(derive_seed(seed, "init-params"));
	Eigen::VectorXd flat(params.parameter_count());
	for (Eigen::Index i = 0; i < flat.size(); ++i)
		flat(i) = rng.uniform(-scale, scale);
	params.unpack(flat);
	return params;
}

ModelParams clone_params(const ModelParams & params)
{
	return params;
}

std::uint64_t params_checksum(const ModelParams & params)
{
	const Eigen::VectorXd flat = params.pack();
	std::string bytes(reinterpret_cast<const char *>(flat.data()), static_cast<std::size_t>(flat.size()) * sizeof(double));
	bytes += std::to_string(params.n_objects);
	return fnv1a64(bytes);
}

} // namespace hio
