#include "hio/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hio/error.hpp"
#include "hio/format.hpp"
#include "hio/log.hpp"

namespace hio
{

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(DecoderKind kind)
{
	switch (kind)
	{
	case DecoderKind::greedy: return "greedy";
	case DecoderKind::sample: return "sample";
	case DecoderKind::vcd: return "vcd";
	case DecoderKind::evil_contrast: return "evil-contrast";
	}
	return "greedy";
}

DecoderKind decoder_from_string(const std::string & name)
{
	if (name == "greedy")
		return DecoderKind::greedy;
	if (name == "sample")
		return DecoderKind::sample;
	if (name == "vcd")
		return DecoderKind::vcd;
	if (name == "evil-contrast")
		return DecoderKind::evil_contrast;
	throw Error("invalid-argument", "unknown decode mode '" + name + "'");
}

namespace
{

std::vector<CorpusEntry> load_corpus(const fs::path & path)
{
	std::vector<CorpusEntry> corpus;
	for (const json & j : parse_ndjson(read_text_file(path)))
		corpus.push_back(corpus_entry_from_json(j));
	return corpus;
}

std::vector<ProbeQuery> load_probes(const fs::path & path)
{
	std::vector<ProbeQuery> probes;
	for (const json & j : parse_ndjson(read_text_file(path)))
		probes.push_back(probe_from_json(j));
	return probes;
}

std::vector<PreferenceRecord> load_records(const fs::path & path)
{
	std::vector<PreferenceRecord> records;
	for (const json & j : parse_ndjson(read_text_file(path)))
		records.push_back(record_from_json(j));
	return records;
}

std::vector<DecodedCaption> load_decodes(const fs::path & path)
{
	std::vector<DecodedCaption> decodes;
	for (const json & j : parse_ndjson(read_text_file(path)))
		decodes.push_back(decoded_from_json(j));
	return decodes;
}

std::vector<Scene> scenes_of(const std::vector<CorpusEntry> & corpus)
{
	std::vector<Scene> scenes;
	for (const CorpusEntry & e : corpus)
		scenes.push_back(e.scene);
	return scenes;
}

OptimConfig seeded(OptimConfig cfg, std::uint64_t seed)
{
	cfg.seed = seed;
	return cfg;
}

const std::vector<ProbeMode> & probe_modes()
{
	static const std::vector<ProbeMode> modes{ProbeMode::random, ProbeMode::popular, ProbeMode::adversarial};
	return modes;
}

const std::vector<LossKind> & loss_kinds()
{
	static const std::vector<LossKind> kinds{LossKind::dpo, LossKind::cbtm, LossKind::amth, LossKind::hio};
	return kinds;
}

} // namespace

Pipeline::Pipeline(RunConfig cfg) : cfg_(std::move(cfg)), out_(cfg_.out), hash_(config_hash(cfg_))
{
	validate_config(cfg_);
}

Provenance Pipeline::provenance(const std::string & stage) const
{
	return {hash_, cfg_.seed, stage, format_version};
}

fs::path Pipeline::fresh_stage_dir(const fs::path & relative) const
{
	const fs::path dir = out_ / relative;
	fs::remove_all(dir);
	fs::create_directories(dir);
	return dir;
}

fs::path Pipeline::require(const fs::path & relative, const std::string & stage) const
{
	const fs::path path = out_ / relative;
	if (!fs::exists(path))
		throw Error("missing-artifact", path.string() + " not found; run '" + stage + "' first");
	return path;
}

void Pipeline::echo_resolved_config() const
{
	const fs::path path = out_ / "config.resolved.toml";
	const std::string text = csv_provenance_line(provenance("config")) + echo_config(cfg_);
	if (fs::exists(path))
	{
		if (read_text_file(path) != text)
			throw Error("config-mismatch", path.string() + " was written by a different configuration");
		return;
	}
	write_text_file(path, text);
}

std::string Pipeline::decoder_name(const RunConfig & cfg, DecoderKind kind, double alpha, LossKind evil_kind)
{
	std::string name = to_string(kind);
	if (kind == DecoderKind::evil_contrast && evil_kind != cfg.loss.kind)
		name += "_" + to_string(evil_kind);
	if ((kind == DecoderKind::vcd || kind == DecoderKind::evil_contrast) && alpha != cfg.loss.alpha)
		name += "_a" + format_double(alpha);
	return name;
}

void Pipeline::gen_data()
{
	echo_resolved_config();
	const fs::path dir = fresh_stage_dir("data");
	const World world = build_world(cfg_.world_spec());

	Rng train_rng = world.make_rng("train-corpus");
	Rng eval_rng = world.make_rng("eval-corpus");
	const auto train = gen_corpus(world, cfg_.world.train_scenes, train_rng);
	const auto eval = gen_corpus(world, cfg_.world.eval_scenes, eval_rng);

	std::vector<json> train_json, eval_json;
	for (const auto & e : train)
		train_json.push_back(to_json(e));
	for (const auto & e : eval)
		eval_json.push_back(to_json(e));
	write_text_file(dir / "corpus.ndjson", to_ndjson(provenance("gen-data"), train_json));
	write_text_file(dir / "eval.ndjson", to_ndjson(provenance("gen-data"), eval_json));

	const auto scenes = scenes_of(eval);
	for (ProbeMode mode : probe_modes())
	{
		Rng rng = world.make_rng("probes-" + to_string(mode));
		std::vector<json> records;
		for (const auto & p : gen_probes(world, scenes, mode, cfg_.world.probes_per_scene, rng))
			records.push_back(to_json(p));
		write_text_file(dir / ("probes_" + to_string(mode) + ".ndjson"), to_ndjson(provenance("gen-data"), records));
	}

	const Eigen::MatrixXd & m = world.spec().cooc;
	std::vector<std::vector<double>> cooc(m.rows(), std::vector<double>(m.cols()));
	for (Eigen::Index r = 0; r < m.rows(); ++r)
		for (Eigen::Index c = 0; c < m.cols(); ++c)
			cooc[r][c] = m(r, c);
	const auto & f = world.frequency();
	json world_json{{"provenance", to_json(provenance("gen-data"))}, {"n_objects", world.n_objects()},
		{"cooc", cooc}, {"frequency", std::vector<double>(f.data(), f.data() + f.size())},
		{"scene_size_min", world.spec().scene_size_min}, {"scene_size_max", world.spec().scene_size_max},
		{"bias_rate", world.spec().bias_rate}};
	write_text_file(dir / "world.json", world_json.dump() + "\n");

	std::size_t biased = 0;
	for (const auto & e : train)
		biased += e.biased.tokens != e.reference.tokens ? 1 : 0;
	logger()->info("gen-data: {} train scenes ({} biased captions), {} eval scenes", train.size(), biased, eval.size());
}

void Pipeline::train_base()
{
	echo_resolved_config();
	const auto corpus = load_corpus(require("data/corpus.ndjson", "gen-data"));
	const fs::path dir = fresh_stage_dir("base");
	const ModelParams init = init_params(cfg_.world.n_objects, cfg_.init_scale, derive_seed(cfg_.seed, "init"));
	const double before = corpus_nll(init, corpus);
	TrainResult result = train_mle(init, corpus, seeded(cfg_.train_base, derive_seed(cfg_.seed, "train-base")));
	const double after = corpus_nll(result.params, corpus);
	save_checkpoint(dir / "checkpoint.json", result.params, provenance("train-base"));
	write_text_file(dir / "train_trace.csv", train_trace_csv(result.trace, provenance("train-base")));
	logger()->info("train-base: corpus NLL {:.4f} -> {:.4f}", before, after);
}

void Pipeline::mine()
{
	echo_resolved_config();
	const auto corpus = load_corpus(require("data/corpus.ndjson", "gen-data"));
	const ModelParams base = load_checkpoint(require("base/checkpoint.json", "train-base"));
	const fs::path dir = fresh_stage_dir("mining");
	const auto pairs = build_annotations(base, corpus, cfg_.decode.max_len);
	const auto records = mine_preferences(base, pairs, cfg_.loss.top_k, cfg_.decode.max_len);

	std::vector<json> pair_json, record_json;
	for (const auto & p : pairs)
		pair_json.push_back(to_json(p));
	for (const auto & r : records)
		record_json.push_back(to_json(r));
	write_text_file(dir / "annotations.ndjson", to_ndjson(provenance("mine"), pair_json));
	write_text_file(dir / "preferences.ndjson", to_ndjson(provenance("mine"), record_json));
	logger()->info("mine: {} annotated pairs -> {} preference records", pairs.size(), records.size());
}

void Pipeline::train_evil(LossKind kind)
{
	echo_resolved_config();
	const ModelParams reference = load_checkpoint(require("base/checkpoint.json", "train-base"));
	const auto records = load_records(require("mining/preferences.ndjson", "mine"));
	if (records.empty())
		throw Error("missing-artifact", "mining produced no preference records");
	const fs::path dir = fresh_stage_dir(fs::path("evil") / to_string(kind));
	LossConfig loss = cfg_.loss_config();
	loss.kind = kind;
	const TrainResult result =
		train_hio(reference, records, loss, seeded(cfg_.train_evil, derive_seed(cfg_.seed, "train-evil")));
	const std::string stage = "train-evil";
	save_checkpoint(dir / "checkpoint.json", result.params, provenance(stage));
	write_text_file(dir / "train_trace.csv", train_trace_csv(result.trace, provenance(stage)));
	const double p_before = mean_cbtm_prob(reference, reference, records, loss.beta);
	const double p_after = mean_cbtm_prob(result.params, reference, records, loss.beta);
	json summary{{"provenance", to_json(provenance(stage))}, {"loss", to_string(kind)},
		{"mean_cbtm_prob_initial", p_before}, {"mean_cbtm_prob_final", p_after}, {"records", records.size()}};
	write_text_file(dir / "summary.json", summary.dump(2) + "\n");
	logger()->info("train-evil[{}]: mean cbtm prob {:.4f} -> {:.4f}", to_string(kind), p_before, p_after);
}

std::string Pipeline::decode(DecoderKind kind, double alpha, LossKind evil_kind)
{
	echo_resolved_config();
	const auto eval = load_corpus(require("data/eval.ndjson", "gen-data"));
	const ModelParams base = load_checkpoint(require("base/checkpoint.json", "train-base"));
	std::optional<ModelParams> evil;
	if (kind == DecoderKind::evil_contrast)
		evil = load_checkpoint(require(fs::path("evil") / to_string(evil_kind) / "checkpoint.json", "train-evil"));

	const std::string name = decoder_name(cfg_, kind, alpha, evil_kind);
	const fs::path dir = fresh_stage_dir(fs::path("decode") / name);
	const Provenance prov = provenance("decode");

	std::vector<json> captions, traces;
	for (const CorpusEntry & entry : eval)
	{
		const Scene & scene = entry.scene;
		DecodeConfig dcfg{alpha, DecodeMode::greedy, cfg_.decode.temperature, cfg_.decode.max_len,
			derive_seed(cfg_.seed, "decode", scene.id)};
		CaptionExample caption;
		switch (kind)
		{
		case DecoderKind::greedy:
			caption = greedy_decode(base, scene, cfg_.decode.max_len);
			break;
		case DecoderKind::sample:
		{
			Rng rng(dcfg.seed);
			caption = sample_decode(base, scene, dcfg, rng);
			break;
		}
		case DecoderKind::vcd:
		case DecoderKind::evil_contrast:
		{
			std::optional<LogitSource> source;
			if (kind == DecoderKind::vcd)
			{
				Rng rng(derive_seed(cfg_.seed, "corrupt", scene.id));
				source = LogitSource::corrupted_scene(
					base, corrupt_scene(scene, cfg_.loss.corrupt_prob, rng), cfg_.loss.corrupt_prob);
			}
			else
				source = LogitSource::evil_model(*evil);
			DecodeResult result = contrastive_decode(base, *source, scene, dcfg);
			for (const TraceStep & step : result.trace)
				traces.push_back(trace_step_json(scene.id, step));
			caption = std::move(result.caption);
			break;
		}
		}
		captions.push_back(to_json(DecodedCaption{scene, caption}));
	}
	write_text_file(dir / "captions.ndjson", to_ndjson(prov, captions));
	if (!traces.empty())
		write_text_file(dir / "traces.ndjson", to_ndjson(prov, traces));
	json meta{{"provenance", to_json(prov)}, {"mode", to_string(kind)}, {"alpha", alpha},
		{"evil_loss", kind == DecoderKind::evil_contrast ? to_string(evil_kind) : ""},
		{"corrupt_prob", kind == DecoderKind::vcd ? cfg_.loss.corrupt_prob : 0.0}};
	write_text_file(dir / "meta.json", meta.dump(2) + "\n");
	logger()->info("decode[{}]: {} captions", name, captions.size());
	return name;
}

void Pipeline::eval()
{
	echo_resolved_config();
	const fs::path decode_root = require("decode", "decode");
	std::vector<std::string> names;
	for (const auto & entry : fs::directory_iterator(decode_root))
		if (entry.is_directory() && fs::exists(entry.path() / "captions.ndjson"))
			names.push_back(entry.path().filename().string());
	std::sort(names.begin(), names.end());
	if (names.empty())
		throw Error("missing-artifact", "no decode outputs found; run 'decode' first");

	std::vector<NamedDecodes> decoders;
	for (const std::string & name : names)
		decoders.push_back({name, load_decodes(decode_root / name / "captions.ndjson")});

	const Vocab vocab{cfg_.world.n_objects};
	const fs::path dir = fresh_stage_dir("eval");
	std::string tables;
	for (ProbeMode mode : probe_modes())
	{
		const auto probes = load_probes(require("data/probes_" + to_string(mode) + ".ndjson", "gen-data"));
		const auto rows = compare_report(decoders, probes, vocab);
		write_text_file(dir / ("metrics_" + to_string(mode) + ".csv"),
			csv_provenance_line(provenance("eval")) + compare_csv(rows));
		tables += "POPE probes: " + to_string(mode) + "\n" + compare_table(rows) + "\n";
	}
	write_text_file(dir / "table.txt", csv_provenance_line(provenance("eval")) + tables);
	std::fputs(tables.c_str(), stderr);
}

void Pipeline::check_condition(const std::string & decoder)
{
	echo_resolved_config();
	const fs::path decode_dir = require(fs::path("decode") / decoder, "decode");
	const json meta = json::parse(read_text_file(decode_dir / "meta.json"));
	const double alpha = meta.at("alpha").get<double>();
	if (!fs::exists(decode_dir / "traces.ndjson"))
		throw Error("missing-artifact", "decoder '" + decoder + "' has no contrastive trace");

	const auto eval = load_corpus(require("data/eval.ndjson", "gen-data"));
	std::map<std::uint64_t, const CorpusEntry *> by_scene;
	for (const CorpusEntry & e : eval)
		by_scene[e.scene.id] = &e;

	std::map<std::uint64_t, std::vector<TraceStep>> traces;
	std::vector<std::uint64_t> order;
	for (const json & j : parse_ndjson(read_text_file(decode_dir / "traces.ndjson")))
	{
		std::uint64_t id = 0;
		TraceStep step = trace_step_from_json(j, &id);
		if (!traces.contains(id))
			order.push_back(id);
		traces[id].push_back(std::move(step));
	}

	const Vocab vocab{cfg_.world.n_objects};
	AuditReport total;
	std::vector<std::uint64_t> row_ids;
	int implication_violations = 0;
	int hallucinated_steps = 0;
	for (std::uint64_t id : order)
	{
		const auto it = by_scene.find(id);
		if (it == by_scene.end())
			throw Error("split-mismatch", "trace scene " + std::to_string(id) + " not in the eval split");
		const AuditReport part = audit_trace(traces[id], it->second->scene, it->second->reference, vocab, alpha);
		for (const AuditStep & s : part.steps)
		{
			row_ids.push_back(id);
			implication_violations += (!s.vacuous && s.exact_ok && alpha > 0 && !s.necessary_ok) ? 1 : 0;
			hallucinated_steps += s.is_hallucination ? 1 : 0;
		}
		merge_into(total, part);
	}

	const fs::path dir = fresh_stage_dir(fs::path("audit") / decoder);
	write_text_file(dir / "audit.csv", audit_csv(row_ids, total, provenance("check-condition")));
	json summary{{"provenance", to_json(provenance("check-condition"))}, {"decoder", decoder}, {"alpha", alpha},
		{"steps", total.steps.size()}, {"evaluated_steps", total.evaluated_steps}, {"vacuous_steps", total.vacuous_steps},
		{"exact_fraction", total.exact_fraction()}, {"necessary_fraction", total.necessary_fraction()},
		{"hallucinated_steps", hallucinated_steps}, {"implication_violations", implication_violations}};
	write_text_file(dir / "summary.json", summary.dump(2) + "\n");
	logger()->info("check-condition[{}]: exact {:.3f}, necessary {:.3f} over {} steps", decoder,
		total.exact_fraction(), total.necessary_fraction(), total.evaluated_steps);
}

void Pipeline::trace_gap()
{
	echo_resolved_config();
	std::vector<std::pair<std::string, std::vector<std::string>>> columns;
	std::size_t rows = 0;
	for (LossKind kind : loss_kinds())
	{
		const fs::path csv = out_ / "evil" / to_string(kind) / "train_trace.csv";
		if (!fs::exists(csv))
			continue;
		std::istringstream in(read_text_file(csv));
		std::string line;
		std::vector<std::string> margins;
		while (std::getline(in, line))
		{
			if (line.empty() || line[0] == '#' || line.rfind("step,", 0) == 0)
				continue;
			// step,loss,mean_margin,grad_norm
			const auto first = line.find(',');
			const auto second = line.find(',', first + 1);
			const auto third = line.find(',', second + 1);
			margins.push_back(line.substr(second + 1, third - second - 1));
		}
		rows = std::max(rows, margins.size());
		columns.emplace_back(to_string(kind), std::move(margins));
	}
	if (columns.empty())
		throw Error("missing-artifact", "no evil training traces found; run 'train-evil' first");

	std::string out = csv_provenance_line(provenance("trace-gap")) + "step";
	for (const auto & [name, _] : columns)
		out += "," + name + "_margin";
	out += "\n";
	for (std::size_t r = 0; r < rows; ++r)
	{
		out += std::to_string(r);
		for (const auto & [_, values] : columns)
			out += "," + (r < values.size() ? values[r] : std::string());
		out += "\n";
	}
	const fs::path dir = fresh_stage_dir("trace");
	write_text_file(dir / "gap.csv", out);
	logger()->info("trace-gap: {} steps for {} loss kind(s)", rows, columns.size());
}

void Pipeline::run_all()
{
	gen_data();
	train_base();
	mine();
	train_evil(cfg_.loss.kind);
	decode(DecoderKind::greedy, cfg_.loss.alpha, cfg_.loss.kind);
	decode(DecoderKind::vcd, cfg_.loss.alpha, cfg_.loss.kind);
	const std::string contrast = decode(DecoderKind::evil_contrast, cfg_.loss.alpha, cfg_.loss.kind);
	eval();
	check_condition(contrast);
	trace_gap();
}

OutputLock::OutputLock(const fs::path & out) : path_(out / ".lock")
{
	fs::create_directories(out);
	std::FILE * f = std::fopen(path_.c_str(), "wx");
	if (f == nullptr)
		throw Error("locked", path_.string() + " exists; another stage is writing to this directory");
	std::fclose(f);
}

OutputLock::~OutputLock()
{
	std::error_code ec;
	fs::remove(path_, ec);
}

const std::vector<std::string> & subcommand_names()
{
	static const std::vector<std::string> names{"gen-data", "train-base", "mine", "train-evil", "decode", "eval",
		"check-condition", "trace-gap", "pipeline"};
	return names;
}

void run_subcommand(const std::string & name, const RunConfig & cfg, const StageFlags & flags)
{
	Pipeline pipeline(cfg);
	OutputLock lock(pipeline.out());
	const LossKind loss = flags.loss.value_or(cfg.loss.kind);
	const double alpha = flags.alpha.value_or(cfg.loss.alpha);
	if (name == "gen-data")
		pipeline.gen_data();
	else if (name == "train-base")
		pipeline.train_base();
	else if (name == "mine")
		pipeline.mine();
	else if (name == "train-evil")
		pipeline.train_evil(loss);
	else if (name == "decode")
		pipeline.decode(flags.mode.value_or(DecoderKind::evil_contrast), alpha, loss);
	else if (name == "eval")
		pipeline.eval();
	else if (name == "check-condition")
		pipeline.check_condition(flags.decoder.value_or(
			Pipeline::decoder_name(cfg, DecoderKind::evil_contrast, alpha, loss)));
	else if (name == "trace-gap")
		pipeline.trace_gap();
	else if (name == "pipeline")
		pipeline.run_all();
	else
		throw Error("usage", "unknown subcommand '" + name + "'");
}

} // namespace hio
