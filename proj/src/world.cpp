#include "hio/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hio/error.hpp"

namespace hio
{

Eigen::MatrixXd clustered_cooc(int n_objects, int group_size, double affinity, double noise, std::uint64_t seed)
{
	if (n_objects < 1 || group_size < 1 || affinity < 0 || noise < 0)
		throw Error("invalid-spec", "clustered_cooc arguments must be positive");
	Rng rng(derive_seed(seed, "cooc"));
	Eigen::MatrixXd cooc = Eigen::MatrixXd::Zero(n_objects, n_objects);
	for (int a = 0; a < n_objects; ++a)
	{
		for (int b = a + 1; b < n_objects; ++b)
		{
			double value = noise > 0 ? rng.uniform(0.0, noise) : 0.0;
			if (a / group_size == b / group_size)
				value += affinity;
			cooc(a, b) = cooc(b, a) = value;
		}
	}
	return cooc;
}

void validate_spec(const WorldSpec & spec)
{
	if (spec.n_objects < 2)
		throw Error("invalid-spec", "n_objects must be at least 2");
	if (spec.scene_size_min < 2 || spec.scene_size_min > spec.scene_size_max || spec.scene_size_max > spec.n_objects)
		throw Error("invalid-spec", "require 2 <= scene_size_min <= scene_size_max <= n_objects");
	if (!(spec.bias_rate >= 0.0 && spec.bias_rate < 1.0))
		throw Error("invalid-spec", "bias_rate must lie in [0, 1)");
	if (!std::isfinite(spec.popularity_skew) || spec.popularity_skew < 0)
		throw Error("invalid-spec", "popularity_skew must be finite and non-negative");
	const auto & c = spec.cooc;
	if (c.rows() != spec.n_objects || c.cols() != spec.n_objects)
		throw Error("invalid-spec", "cooc must be n_objects x n_objects");
	if (!c.allFinite())
		throw Error("invalid-spec", "cooc has non-finite entries");
	if ((c.array() < 0).any())
		throw Error("invalid-spec", "cooc has negative entries");
	if (c.diagonal().cwiseAbs().maxCoeff() != 0.0)
		throw Error("invalid-spec", "cooc diagonal must be zero");
	if (c != c.transpose())
		throw Error("invalid-spec", "cooc must be symmetric");
}

World::World(WorldSpec spec) : spec_(std::move(spec))
{
	validate_spec(spec_);
	vocab_ = Vocab{spec_.n_objects};
	base_weights_.resize(spec_.n_objects);
	for (int i = 0; i < spec_.n_objects; ++i)
		base_weights_(i) = std::pow(static_cast<double>(i + 1), -spec_.popularity_skew);
	base_weights_ /= base_weights_.sum();

	frequency_ = Eigen::VectorXd::Zero(spec_.n_objects);
	Rng rng = make_rng("frequency");
	for (int s = 0; s < frequency_samples; ++s)
		for (int v : sample_scene(*this, rng).objects)
			frequency_(v) += 1.0;
	frequency_ /= static_cast<double>(frequency_samples);
}

Eigen::VectorXd World::affinity_to(const Scene & scene) const
{
	Eigen::VectorXd total = Eigen::VectorXd::Zero(spec_.n_objects);
	for (int v : scene.objects)
		total += spec_.cooc.row(v).transpose();
	return total;
}

Rng World::make_rng(std::string_view stream, std::uint64_t index) const
{
	return Rng(derive_seed(spec_.seed, stream, index));
}

World build_world(const WorldSpec & spec)
{
	return World(spec);
}

Scene sample_scene(const World & world, Rng & rng, std::uint64_t id)
{
	const auto & spec = world.spec();
	const int span = spec.scene_size_max - spec.scene_size_min + 1;
	const int size = spec.scene_size_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));

	Eigen::ArrayXd log_boost = Eigen::ArrayXd::Zero(spec.n_objects);
	std::vector<char> chosen(spec.n_objects, 0);
	std::vector<double> weights(spec.n_objects);
	Scene scene{id, {}};
	scene.objects.reserve(size);
	for (int k = 0; k < size; ++k)
	{
		const double shift = log_boost.maxCoeff();
		for (int i = 0; i < spec.n_objects; ++i)
			weights[i] = chosen[i] ? 0.0 : world.base_weights()(i) * std::exp(log_boost(i) - shift);
		const auto pick = static_cast<int>(rng.categorical(weights));
		chosen[pick] = 1;
		scene.objects.push_back(pick);
		log_boost += spec.cooc.row(pick).transpose().array();
	}
	std::sort(scene.objects.begin(), scene.objects.end());
	return scene;
}

CaptionExample reference_caption(const Scene & scene, const Vocab & vocab, Rng & rng)
{
	CaptionExample caption{scene.id, Tokens(scene.objects.begin(), scene.objects.end())};
	rng.shuffle(caption.tokens);
	caption.tokens.push_back(vocab.period());
	return caption;
}

CaptionExample inject_bias(const CaptionExample & caption, const Scene & scene, const World & world, Rng & rng)
{
	if (!rng.bernoulli(world.spec().bias_rate))
		return caption;

	const Eigen::VectorXd affinity = world.affinity_to(scene);
	std::vector<int> absent;
	std::vector<double> weights;
	for (int v = 0; v < world.n_objects(); ++v)
	{
		const bool mentioned = std::find(caption.tokens.begin(), caption.tokens.end(), v) != caption.tokens.end();
		if (scene.contains(v) || mentioned)
			continue;
		absent.push_back(v);
		weights.push_back(affinity(v));
	}
	if (absent.empty())
		return caption;
	if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0.0)
		std::fill(weights.begin(), weights.end(), 1.0);

	const int inserted = absent[rng.categorical(weights)];
	const auto position = static_cast<std::ptrdiff_t>(rng.below(caption.tokens.size()));
	CaptionExample out = caption;
	out.tokens.insert(out.tokens.begin() + position, inserted);
	return out;
}

Scene corrupt_scene(const Scene & scene, double drop_prob, Rng & rng)
{
	if (!(drop_prob >= 0.0 && drop_prob <= 1.0))
		throw Error("invalid-argument", "drop probability must lie in [0, 1]");
	Scene out{scene.id, {}};
	for (int v : scene.objects)
		if (!rng.bernoulli(drop_prob))
			out.objects.push_back(v);
	if (out.objects.empty() && !scene.objects.empty())
		out.objects.push_back(scene.objects[rng.below(scene.objects.size())]);
	return out;
}

std::vector<CorpusEntry> gen_corpus(const World & world, int n_scenes, Rng & rng)
{
	if (n_scenes < 1)
		throw Error("invalid-argument", "gen_corpus needs n_scenes >= 1");
	std::vector<CorpusEntry> corpus;
	corpus.reserve(n_scenes);
	for (int i = 0; i < n_scenes; ++i)
	{
		Scene scene = sample_scene(world, rng, static_cast<std::uint64_t>(i));
		CaptionExample reference = reference_caption(scene, world.vocab(), rng);
		CaptionExample biased = inject_bias(reference, scene, world, rng);
		corpus.push_back({std::move(scene), std::move(biased), std::move(reference)});
	}
	return corpus;
}

std::string to_string(ProbeMode mode)
{
	switch (mode)
	{
	case ProbeMode::random: return "random";
	case ProbeMode::popular: return "popular";
	case ProbeMode::adversarial: return "adversarial";
	}
	return "random";
}

ProbeMode probe_mode_from_string(const std::string & name)
{
	if (name == "random")
		return ProbeMode::random;
	if (name == "popular")
		return ProbeMode::popular;
	if (name == "adversarial")
		return ProbeMode::adversarial;
	throw Error("invalid-argument", "unknown probe mode '" + name + "'");
}

std::vector<ProbeQuery> gen_probes(
	const World & world, const std::vector<Scene> & scenes, ProbeMode mode, int per_scene, Rng & rng)
{
	if (per_scene < 1)
		throw Error("invalid-argument", "per_scene must be positive");
	std::vector<ProbeQuery> probes;
	const auto & freq = world.frequency();
	for (const Scene & scene : scenes)
	{
		std::vector<int> present = scene.objects;
		std::vector<int> absent;
		for (int v = 0; v < world.n_objects(); ++v)
			if (!scene.contains(v))
				absent.push_back(v);
		if (absent.empty())
			throw Error("no-negatives", "scene " + std::to_string(scene.id) + " contains every object");

		rng.shuffle(present);
		const auto n_pos = std::min<std::size_t>(per_scene, present.size());
		for (std::size_t i = 0; i < n_pos; ++i)
			probes.push_back({scene.id, present[i], true, mode});

		switch (mode)
		{
		case ProbeMode::random:
			rng.shuffle(absent);
			break;
		case ProbeMode::popular:
			std::stable_sort(absent.begin(), absent.end(), [&](int a, int b) { return freq(a) > freq(b); });
			break;
		case ProbeMode::adversarial:
		{
			const Eigen::VectorXd affinity = world.affinity_to(scene);
			std::stable_sort(absent.begin(), absent.end(), [&](int a, int b) {
				if (affinity(a) != affinity(b))
					return affinity(a) > affinity(b);
				return freq(a) > freq(b);
			});
			break;
		}
		}
		const auto n_neg = std::min<std::size_t>(per_scene, absent.size());
		for (std::size_t i = 0; i < n_neg; ++i)
			probes.push_back({scene.id, absent[i], false, mode});
	}
	return probes;
}

} // namespace hio
