#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hio/losses.hpp"
#include "hio/model.hpp"
#include "hio/rng.hpp"
#include "hio/world.hpp"

namespace hio
{

enum class OptimizerKind
{
	sgd,
	adam
};

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string & name);

struct OptimConfig
{
	double learning_rate = 1e-2;
	int steps = 500;
	int batch_size = 32;
	OptimizerKind optimizer = OptimizerKind::adam;
	double beta1 = 0.9;
	double beta2 = 0.999;
	double epsilon = 1e-8;
	std::uint64_t seed = 0;
	std::optional<double> grad_clip = 10.0;
};

void validate_optim_config(const OptimConfig & cfg);

struct TraceRecord
{
	int step = 0;
	double loss = 0.0;
	double mean_margin = 0.0;
	double grad_norm = 0.0;
};

using TrainTrace = std::vector<TraceRecord>;

struct TrainResult
{
	ModelParams params;
	TrainTrace trace;
};

// Yields mini-batches from a fresh seeded permutation each epoch.
class BatchSampler
{
public:
	BatchSampler(std::size_t n_items, std::size_t batch_size, std::uint64_t seed);
	std::vector<std::size_t> next();

private:
	void reshuffle();

	std::size_t batch_size_;
	std::vector<std::size_t> order_;
	std::size_t cursor_ = 0;
	Rng rng_;
};

// First-order update on a flat parameter vector.
class Optimizer
{
public:
	explicit Optimizer(const OptimConfig & cfg, Eigen::Index dimension);
	void apply(Eigen::VectorXd & params, const Eigen::VectorXd & grad);

private:
	OptimConfig cfg_;
	Eigen::VectorXd m_;
	Eigen::VectorXd v_;
	int t_ = 0;
};

double corpus_nll(const ModelParams & params, std::span<const CorpusEntry> corpus);

TrainResult train_mle(const ModelParams & init, std::span<const CorpusEntry> corpus, const OptimConfig & cfg);

TrainResult train_hio(const ModelParams & reference, std::span<const PreferenceRecord> records,
	const LossConfig & loss_cfg, const OptimConfig & optim_cfg);

} // namespace hio
