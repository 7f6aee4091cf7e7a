#include "hio/config.hpp"

#include <toml++/toml.hpp>

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "hio/error.hpp"
#include "hio/format.hpp"
#include "hio/io.hpp"

namespace hio
{

namespace
{

bool same_optim(const OptimConfig & a, const OptimConfig & b)
{
	return a.learning_rate == b.learning_rate && a.steps == b.steps && a.batch_size == b.batch_size &&
		a.optimizer == b.optimizer && a.grad_clip == b.grad_clip;
}

using Setter = std::function<void(const toml::node &, const std::string &)>;

double as_real(const toml::node & node, const std::string & key)
{
	if (auto v = node.value<double>(); v && (node.is_floating_point() || node.is_integer()))
		return *v;
	throw Error("invalid-config", key + ": expected a number");
}

std::int64_t as_int(const toml::node & node, const std::string & key)
{
	if (!node.is_integer())
		throw Error("invalid-config", key + ": expected an integer");
	return *node.value<std::int64_t>();
}

std::string as_string(const toml::node & node, const std::string & key)
{
	if (!node.is_string())
		throw Error("invalid-config", key + ": expected a string");
	return *node.value<std::string>();
}

Setter real_field(double & target)
{
	return [&target](const toml::node & n, const std::string & k) { target = as_real(n, k); };
}

Setter int_field(int & target)
{
	return [&target](const toml::node & n, const std::string & k) {
		const auto v = as_int(n, k);
		if (v < INT32_MIN || v > INT32_MAX)
			throw Error("invalid-config", k + ": integer out of range");
		target = static_cast<int>(v);
	};
}

void apply_table(const toml::table & table, const std::string & prefix, const std::map<std::string, Setter> & fields)
{
	for (const auto & [key, node] : table)
	{
		const std::string path = prefix.empty() ? std::string(key.str()) : prefix + "." + std::string(key.str());
		const auto it = fields.find(std::string(key.str()));
		if (it == fields.end())
			throw Error("unknown-key", path);
		it->second(node, path);
	}
}

std::map<std::string, Setter> optim_setters(OptimConfig & o)
{
	return {
		{"optimizer", [&o](const toml::node & n, const std::string & k) {
			 try
			 {
				 o.optimizer = optimizer_from_string(as_string(n, k));
			 }
			 catch (const Error &)
			 {
				 throw Error("invalid-config", k + ": expected \"sgd\" or \"adam\"");
			 }
		 }},
		{"learning_rate", real_field(o.learning_rate)},
		{"steps", int_field(o.steps)},
		{"batch_size", int_field(o.batch_size)},
		{"grad_clip", [&o](const toml::node & n, const std::string & k) {
			 const double v = as_real(n, k);
			 if (v < 0)
				 throw Error("invalid-config", k + ": must be >= 0 (0 disables clipping)");
			 o.grad_clip = v == 0 ? std::nullopt : std::optional<double>(v);
		 }},
	};
}

Setter section(std::function<void(const toml::table &, const std::string &)> apply)
{
	return [apply](const toml::node & n, const std::string & k) {
		if (!n.is_table())
			throw Error("invalid-config", k + ": expected a table");
		apply(*n.as_table(), k);
	};
}

} // namespace

RunConfig::RunConfig()
{
	train_base.learning_rate = 1e-2;
	train_base.steps = 1500;
	train_base.batch_size = 32;
	train_evil.learning_rate = 1e-3;
	train_evil.steps = 1500;
	train_evil.batch_size = 16;
}

bool RunConfig::operator==(const RunConfig & other) const
{
	return seed == other.seed && world == other.world && same_optim(train_base, other.train_base) &&
		init_scale == other.init_scale && same_optim(train_evil, other.train_evil) && loss == other.loss &&
		decode == other.decode && out == other.out;
}

WorldSpec RunConfig::world_spec() const
{
	WorldSpec spec;
	spec.n_objects = world.n_objects;
	spec.cooc = clustered_cooc(world.n_objects, world.group_size, world.affinity, world.cooc_noise, seed);
	spec.scene_size_min = world.scene_size_min;
	spec.scene_size_max = world.scene_size_max;
	spec.bias_rate = world.bias_rate;
	spec.popularity_skew = world.popularity_skew;
	spec.seed = seed;
	return spec;
}

void validate_config(const RunConfig & cfg)
{
	const auto & w = cfg.world;
	const auto require = [](bool ok, const std::string & key, const std::string & what) {
		if (!ok)
			throw Error("invalid-config", key + ": " + what);
	};
	require(w.n_objects >= 2, "world.n_objects", "must be >= 2");
	require(w.group_size >= 1, "world.group_size", "must be >= 1");
	require(w.affinity >= 0, "world.affinity", "must be >= 0");
	require(w.cooc_noise >= 0, "world.cooc_noise", "must be >= 0");
	require(w.popularity_skew >= 0, "world.popularity_skew", "must be >= 0");
	require(w.scene_size_min >= 2, "world.scene_size_min", "must be >= 2");
	require(w.scene_size_max >= w.scene_size_min, "world.scene_size_max", "must be >= scene_size_min");
	require(w.scene_size_max < w.n_objects, "world.scene_size_max", "must be < n_objects so probes have negatives");
	require(w.bias_rate >= 0 && w.bias_rate < 1, "world.bias_rate", "must lie in [0, 1)");
	require(w.train_scenes >= 1, "world.train_scenes", "must be >= 1");
	require(w.eval_scenes >= 1, "world.eval_scenes", "must be >= 1");
	require(w.probes_per_scene >= 1, "world.probes_per_scene", "must be >= 1");
	for (const auto & [name, o] : {std::pair{"train_base", &cfg.train_base}, std::pair{"train_evil", &cfg.train_evil}})
	{
		const std::string n(name);
		require(o->learning_rate > 0, n + ".learning_rate", "must be > 0");
		require(o->steps >= 0, n + ".steps", "must be >= 0");
		require(o->batch_size >= 1, n + ".batch_size", "must be >= 1");
	}
	require(cfg.init_scale >= 0, "train_base.init_scale", "must be >= 0");
	require(cfg.loss.alpha >= 0, "loss.alpha", "must be >= 0");
	require(cfg.loss.beta > 0, "loss.beta", "must be > 0");
	require(cfg.loss.gamma >= 0, "loss.gamma", "must be >= 0");
	require(cfg.loss.top_k >= 1 && cfg.loss.top_k <= w.n_objects + 1, "loss.top_k", "must lie in [1, n_objects + 1]");
	require(cfg.loss.corrupt_prob >= 0 && cfg.loss.corrupt_prob <= 1, "loss.corrupt_prob", "must lie in [0, 1]");
	require(cfg.decode.max_len >= 2, "decode.max_len", "must be >= 2");
	require(cfg.decode.temperature > 0, "decode.temperature", "must be > 0");
	require(!cfg.out.empty(), "paths.out", "must be non-empty");
}

RunConfig parse_config_text(const std::string & text, const std::string & source)
{
	toml::table root;
	try
	{
		root = toml::parse(text, source);
	}
	catch (const toml::parse_error & e)
	{
		std::ostringstream msg;
		msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
		throw Error("malformed-config", msg.str());
	}

	RunConfig cfg;
	auto & w = cfg.world;
	auto base_setters = optim_setters(cfg.train_base);
	base_setters["init_scale"] = real_field(cfg.init_scale);
	const std::map<std::string, Setter> top{
		{"seed", [&](const toml::node & n, const std::string & k) {
			 const auto v = as_int(n, k);
			 if (v < 0)
				 throw Error("invalid-config", k + ": must be non-negative");
			 cfg.seed = static_cast<std::uint64_t>(v);
		 }},
		{"world", section([&](const toml::table & t, const std::string & k) {
			 apply_table(t, k,
				 {{"n_objects", int_field(w.n_objects)}, {"group_size", int_field(w.group_size)},
					 {"affinity", real_field(w.affinity)}, {"cooc_noise", real_field(w.cooc_noise)},
					 {"popularity_skew", real_field(w.popularity_skew)}, {"scene_size_min", int_field(w.scene_size_min)},
					 {"scene_size_max", int_field(w.scene_size_max)}, {"bias_rate", real_field(w.bias_rate)},
					 {"train_scenes", int_field(w.train_scenes)}, {"eval_scenes", int_field(w.eval_scenes)},
					 {"probes_per_scene", int_field(w.probes_per_scene)}});
		 })},
		{"train_base", section([&](const toml::table & t, const std::string & k) { apply_table(t, k, base_setters); })},
		{"train_evil", section([&](const toml::table & t, const std::string & k) {
			 apply_table(t, k, optim_setters(cfg.train_evil));
		 })},
		{"loss", section([&](const toml::table & t, const std::string & k) {
			 apply_table(t, k,
				 {{"kind", [&](const toml::node & n, const std::string & key) {
					   try
					   {
						   cfg.loss.kind = loss_kind_from_string(as_string(n, key));
					   }
					   catch (const Error &)
					   {
						   throw Error("invalid-config", key + ": expected dpo|cbtm|amth|hio");
					   }
				   }},
					 {"alpha", real_field(cfg.loss.alpha)}, {"beta", real_field(cfg.loss.beta)},
					 {"gamma", real_field(cfg.loss.gamma)}, {"top_k", int_field(cfg.loss.top_k)},
					 {"corrupt_prob", real_field(cfg.loss.corrupt_prob)}});
		 })},
		{"decode", section([&](const toml::table & t, const std::string & k) {
			 apply_table(t, k, {{"max_len", int_field(cfg.decode.max_len)}, {"temperature", real_field(cfg.decode.temperature)}});
		 })},
		{"paths", section([&](const toml::table & t, const std::string & k) {
			 apply_table(t, k, {{"out", [&](const toml::node & n, const std::string & key) { cfg.out = as_string(n, key); }}});
		 })},
	};
	apply_table(root, "", top);
	validate_config(cfg);
	return cfg;
}

RunConfig parse_config(const std::filesystem::path & path)
{
	if (!std::filesystem::exists(path))
		throw Error("missing-config", path.string() + " does not exist");
	return parse_config_text(read_text_file(path), path.string());
}

namespace
{

std::string quoted(const std::string & s)
{
	std::ostringstream out;
	out << '"';
	for (char ch : s)
	{
		if (ch == '"' || ch == '\\')
			out << '\\' << ch;
		else if (static_cast<unsigned char>(ch) < 0x20)
		{
			char buf[8];
			std::snprintf(buf, sizeof(buf), "\\u%04x", static_cast<unsigned>(static_cast<unsigned char>(ch)));
			out << buf;
		}
		else
			out << ch;
	}
	out << '"';
	return out.str();
}

// TOML floats need a decimal point or exponent.
std::string toml_real(double v)
{
	std::string s = format_double(v);
	if (s.find_first_of(".eEn") == std::string::npos)
		s += ".0";
	return s;
}

void echo_optim(std::ostringstream & out, const OptimConfig & o)
{
	out << "optimizer = " << quoted(to_string(o.optimizer)) << "\n";
	out << "learning_rate = " << toml_real(o.learning_rate) << "\n";
	out << "steps = " << o.steps << "\n";
	out << "batch_size = " << o.batch_size << "\n";
	out << "grad_clip = " << toml_real(o.grad_clip.value_or(0.0)) << "\n";
}

} // namespace

std::string echo_config(const RunConfig & cfg)
{
	std::ostringstream out;
	const auto & w = cfg.world;
	out << "seed = " << cfg.seed << "\n\n";
	out << "[world]\n";
	out << "n_objects = " << w.n_objects << "\n";
	out << "group_size = " << w.group_size << "\n";
	out << "affinity = " << toml_real(w.affinity) << "\n";
	out << "cooc_noise = " << toml_real(w.cooc_noise) << "\n";
	out << "popularity_skew = " << toml_real(w.popularity_skew) << "\n";
	out << "scene_size_min = " << w.scene_size_min << "\n";
	out << "scene_size_max = " << w.scene_size_max << "\n";
	out << "bias_rate = " << toml_real(w.bias_rate) << "\n";
	out << "train_scenes = " << w.train_scenes << "\n";
	out << "eval_scenes = " << w.eval_scenes << "\n";
	out << "probes_per_scene = " << w.probes_per_scene << "\n\n";
	out << "[train_base]\n";
	echo_optim(out, cfg.train_base);
	out << "init_scale = " << toml_real(cfg.init_scale) << "\n\n";
	out << "[train_evil]\n";
	echo_optim(out, cfg.train_evil);
	out << "\n[loss]\n";
	out << "kind = " << quoted(to_string(cfg.loss.kind)) << "\n";
	out << "alpha = " << toml_real(cfg.loss.alpha) << "\n";
	out << "beta = " << toml_real(cfg.loss.beta) << "\n";
	out << "gamma = " << toml_real(cfg.loss.gamma) << "\n";
	out << "top_k = " << cfg.loss.top_k << "\n";
	out << "corrupt_prob = " << toml_real(cfg.loss.corrupt_prob) << "\n\n";
	out << "[decode]\n";
	out << "max_len = " << cfg.decode.max_len << "\n";
	out << "temperature = " << toml_real(cfg.decode.temperature) << "\n\n";
	out << "[paths]\n";
	out << "out = " << quoted(cfg.out) << "\n";
	return out.str();
}

std::string config_hash(const RunConfig & cfg)
{
	// The output location is not part of an experiment's identity.
	RunConfig keyed = cfg;
	keyed.out.clear();
	char buf[17];
	std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(echo_config(keyed))));
	return buf;
}

} // namespace hio
