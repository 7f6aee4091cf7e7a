#include "hio/training.hpp"

#include <cmath>
#include <numeric>

#include "hio/error.hpp"

namespace hio
{

std::string to_string(OptimizerKind kind)
{
	return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind optimizer_from_string(const std::string & name)
{
	if (name == "sgd")
		return OptimizerKind::sgd;
	if (name == "adam" || name == "adaptive-moment")
		return OptimizerKind::adam;
	throw Error("invalid-argument", "unknown optimizer '" + name + "'");
}

void validate_optim_config(const OptimConfig & cfg)
{
	if (!(cfg.learning_rate > 0) || !std::isfinite(cfg.learning_rate))
		throw Error("invalid-config", "learning_rate must be positive");
	if (cfg.steps < 0)
		throw Error("invalid-config", "steps must be non-negative");
	if (cfg.batch_size < 1)
		throw Error("invalid-config", "batch_size must be positive");
	if (cfg.grad_clip && !(*cfg.grad_clip > 0))
		throw Error("invalid-config", "grad_clip must be positive");
}

BatchSampler::BatchSampler(std::size_t n_items, std::size_t batch_size, std::uint64_t seed)
	: batch_size_(std::min(batch_size, n_items)), order_(n_items), rng_(derive_seed(seed, "batches"))
{
	if (n_items == 0 || batch_size == 0)
		throw Error("invalid-argument", "BatchSampler needs items and a positive batch size");
	reshuffle();
}

void BatchSampler::reshuffle()
{
	std::iota(order_.begin(), order_.end(), std::size_t{0});
	rng_.shuffle(order_);
	cursor_ = 0;
}

std::vector<std::size_t> BatchSampler::next()
{
	if (cursor_ + batch_size_ > order_.size())
		reshuffle();
	std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
		order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_size_));
	cursor_ += batch_size_;
	return batch;
}

Optimizer::Optimizer(const OptimConfig & cfg, Eigen::Index dimension)
	: cfg_(cfg), m_(Eigen::VectorXd::Zero(dimension)), v_(Eigen::VectorXd::Zero(dimension))
{
}

void Optimizer::apply(Eigen::VectorXd & params, const Eigen::VectorXd & grad)
{
	if (cfg_.optimizer == OptimizerKind::sgd)
	{
		params -= cfg_.learning_rate * grad;
		return;
	}
	++t_;
	m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
	v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
	const double m_corr = 1.0 - std::pow(cfg_.beta1, t_);
	const double v_corr = 1.0 - std::pow(cfg_.beta2, t_);
	params.array() -= cfg_.learning_rate * (m_.array() / m_corr) / ((v_.array() / v_corr).sqrt() + cfg_.epsilon);
}

namespace
{

// Clips in place and returns the pre-clip norm.
double clip_gradient(Eigen::VectorXd & grad, const std::optional<double> & clip)
{
	const double norm = grad.norm();
	if (clip && norm > *clip)
		grad *= *clip / norm;
	return norm;
}

void check_finite_step(double loss, double grad_norm, const Eigen::VectorXd & params, int step)
{
	if (!std::isfinite(loss) || !std::isfinite(grad_norm) || !params.allFinite())
		throw Error("training-diverged", "non-finite value at step " + std::to_string(step));
}

} // namespace

double corpus_nll(const ModelParams & params, std::span<const CorpusEntry> corpus)
{
	double total = 0.0;
	for (const CorpusEntry & entry : corpus)
		total -= sequence_log_prob(params, entry.scene, entry.biased.tokens);
	return total / static_cast<double>(corpus.size());
}

TrainResult train_mle(const ModelParams & init, std::span<const CorpusEntry> corpus, const OptimConfig & cfg)
{
	validate_optim_config(cfg);
	if (corpus.empty())
		throw Error("invalid-argument", "train_mle needs a non-empty corpus");
	TrainResult result{clone_params(init), {}};
	if (cfg.steps == 0)
		return result;

	BatchSampler sampler(corpus.size(), static_cast<std::size_t>(cfg.batch_size), cfg.seed);
	Optimizer optimizer(cfg, init.parameter_count());
	Eigen::VectorXd flat = result.params.pack();
	for (int step = 0; step < cfg.steps; ++step)
	{
		const auto batch = sampler.next();
		Gradient grad = ModelParams::zeros(init.n_objects);
		double loss = 0.0;
		const double weight = -1.0 / static_cast<double>(batch.size());
		for (std::size_t idx : batch)
			loss += weight * accumulate_sequence_log_prob(
				result.params, corpus[idx].scene, corpus[idx].biased.tokens, &grad, weight);

		Eigen::VectorXd g = grad.pack();
		const double norm = clip_gradient(g, cfg.grad_clip);
		optimizer.apply(flat, g);
		check_finite_step(loss, norm, flat, step);
		result.params.unpack(flat);
		result.trace.push_back({step, loss, 0.0, norm});
	}
	return result;
}

TrainResult train_hio(const ModelParams & reference, std::span<const PreferenceRecord> records,
	const LossConfig & loss_cfg, const OptimConfig & optim_cfg)
{
	validate_optim_config(optim_cfg);
	validate_loss_config(loss_cfg);
	if (records.empty())
		throw Error("invalid-argument", "train_hio needs at least one preference record");
	const std::uint64_t reference_checksum = params_checksum(reference);

	TrainResult result{clone_params(reference), {}};
	if (optim_cfg.steps > 0)
	{
		BatchSampler sampler(records.size(), static_cast<std::size_t>(optim_cfg.batch_size), optim_cfg.seed);
		Optimizer optimizer(optim_cfg, reference.parameter_count());
		Eigen::VectorXd flat = result.params.pack();
		std::vector<PreferenceRecord> batch;
		for (int step = 0; step < optim_cfg.steps; ++step)
		{
			batch.clear();
			for (std::size_t idx : sampler.next())
				batch.push_back(records[idx]);
			BatchLoss loss = batch_loss(result.params, reference, batch, loss_cfg);
			Eigen::VectorXd g = loss.grad.pack();
			const double norm = clip_gradient(g, optim_cfg.grad_clip);
			optimizer.apply(flat, g);
			check_finite_step(loss.value, norm, flat, step);
			result.params.unpack(flat);
			result.trace.push_back({step, loss.value, loss.mean_margin, norm});
		}
	}
	if (params_checksum(reference) != reference_checksum)
		throw Error("reference-mutated", "reference parameters changed during training");
	return result;
}

} // namespace hio
