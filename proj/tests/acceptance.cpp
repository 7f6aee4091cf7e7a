// Acceptance suite: one PASS/FAIL line per numbered criterion.
//
//   acceptance [--work-dir DIR] [--config FILE] [--keep] [-v] [--expect-red 7,...]
//
// Exit status is 0 when the set of failing criteria equals the --expect-red
// set (empty by default), 1 otherwise.

#include <CLI11/CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "hio/config.hpp"
#include "hio/decoding.hpp"
#include "hio/eval.hpp"
#include "hio/io.hpp"
#include "hio/log.hpp"
#include "hio/losses.hpp"
#include "hio/mining.hpp"
#include "hio/pipeline.hpp"
#include "hio/theory.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using hio::Tokens;

namespace
{

struct Outcome
{
	bool pass = false;
	std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
	return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char * pattern, auto... args)
{
	char buf[512];
	std::snprintf(buf, sizeof(buf), pattern, args...);
	return buf;
}

// ---- 1: gradient exactness -------------------------------------------------

struct LossInstance
{
	hio::ModelParams policy, reference;
	hio::PreferenceRecord record;
};

LossInstance random_loss_instance(hio::Rng & rng)
{
	const int n = 3 + static_cast<int>(rng.below(3));
	LossInstance inst{oracle::random_params(n, 1.0, rng), oracle::random_params(n, 1.0, rng), {}};
	inst.record = oracle::random_record(n, rng, 1 + static_cast<int>(rng.below(3)));
	return inst;
}

Outcome gradients()
{
	const auto start = Clock::now();
	const double beta = 0.7, gamma = 0.3, tol = 1e-4;
	hio::Rng rng(1001);
	std::map<std::string, double> worst;

	using Analytic = std::function<Eigen::VectorXd(const LossInstance &)>;
	using Value = std::function<double(const hio::ModelParams &, const LossInstance &)>;
	const std::vector<std::tuple<std::string, Analytic, Value>> checks{
		{"sequence_log_prob",
			[](const LossInstance & i) {
				return hio::grad_sequence_log_prob(i.policy, i.record.scene, i.record.candidates[0].y_l).pack();
			},
			[](const hio::ModelParams & q, const LossInstance & i) {
				return oracle::log_prob(q, i.record.scene, i.record.candidates[0].y_l);
			}},
		{"dpo_loss", [&](const LossInstance & i) { return hio::dpo_loss(i.policy, i.reference, i.record, beta).grad.pack(); },
			[&](const hio::ModelParams & q, const LossInstance & i) { return oracle::dpo(q, i.reference, i.record, beta); }},
		{"amth_loss",
			[&](const LossInstance & i) { return hio::amth_loss(i.policy, i.reference, i.record, beta).grad.pack(); },
			[&](const hio::ModelParams & q, const LossInstance & i) { return oracle::amth(q, i.reference, i.record, beta); }},
		{"aci_margin",
			[](const LossInstance & i) {
				return hio::aci_margin(i.policy, i.record.scene, i.record.candidates[0]).grad.pack();
			},
			[](const hio::ModelParams & q, const LossInstance & i) {
				return oracle::margin(q, i.record.scene, i.record.candidates[0]);
			}},
		{"hio_loss",
			[&](const LossInstance & i) {
				return hio::hio_loss(i.policy, i.reference, i.record, beta, gamma).grad.pack();
			},
			[&](const hio::ModelParams & q, const LossInstance & i) {
				return oracle::hio_objective(q, i.reference, i.record, beta, gamma);
			}},
	};
	for (const auto & [name, analytic, value] : checks)
	{
		double w = 0.0;
		for (int trial = 0; trial < 100; ++trial)
		{
			const LossInstance inst = random_loss_instance(rng);
			const Eigen::VectorXd fd =
				oracle::fd_gradient([&](const hio::ModelParams & q) { return value(q, inst); }, inst.policy, 1e-5);
			w = std::max(w, oracle::max_rel_error(analytic(inst), fd));
		}
		worst[name] = w;
	}
	const double secs = seconds_since(start);
	double overall = 0.0;
	std::string per;
	for (const auto & [name, w] : worst)
	{
		overall = std::max(overall, w);
		per += fmt(" %s=%.1e", name.c_str(), w);
	}
	return {overall < tol && secs < 120,
		fmt("gradient exactness: max rel err %.2e (< 1e-4), 5 x 100 instances,", overall) + per +
			fmt(", %.1f s (< 120 s)", secs)};
}

// ---- 2: theory implication -------------------------------------------------

Outcome implication()
{
	const auto start = Clock::now();
	hio::Rng rng(2002);
	int exact = 0, violations = 0;
	for (int trial = 0; trial < 10000; ++trial)
	{
		const int n = 3 + static_cast<int>(rng.below(14));
		hio::TheoryInstance inst;
		inst.base.resize(n);
		inst.amplified.resize(n);
		for (int i = 0; i < n; ++i)
		{
			inst.base(i) = rng.normal();
			inst.amplified(i) = rng.normal();
		}
		std::vector<int> ids(n);
		for (int i = 0; i < n; ++i)
			ids[i] = i;
		rng.shuffle(ids);
		const int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
		const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - m)));
		inst.halluc_idx.assign(ids.begin(), ids.begin() + m);
		inst.correct_idx.assign(ids.begin() + m, ids.begin() + m + k);
		do
			inst.alpha = rng.uniform(0.0, 2.0);
		while (inst.alpha == 0.0);
		if (!hio::exact_condition(inst).holds)
			continue;
		++exact;
		for (int j : inst.correct_idx)
			violations += hio::necessary_condition(inst, j).holds ? 0 : 1;
	}
	hio::TheoryInstance witness;
	witness.base = Eigen::VectorXd::Zero(3);
	witness.amplified = Eigen::VectorXd(3);
	witness.amplified << 3, -1, 0;
	witness.halluc_idx = {0, 1};
	witness.correct_idx = {2};
	witness.alpha = 1.0;
	const bool witnessed = !hio::exact_condition(witness).holds && hio::necessary_condition(witness, 2).holds;
	const double secs = seconds_since(start);
	return {violations == 0 && exact > 0 && witnessed && secs < 30,
		fmt("theory implication: %d violations over 10000 instances (%d exact), non-sufficiency witness %s, "
			"%.2f s (< 30 s)",
			violations, exact, witnessed ? "holds" : "MISSING", secs)};
}

// ---- 3: reduction identities ----------------------------------------------

Outcome reductions()
{
	hio::Rng rng(3003);
	const double tol = 1e-12, ln2 = std::log(2.0);
	int decode_mismatch = 0;
	double worst = 0.0;
	const int n = 24;
	const hio::ModelParams base = oracle::random_params(n, 2.0, rng);
	const hio::ModelParams clone = hio::clone_params(base);
	const hio::ModelParams other = oracle::random_params(n, 2.0, rng);
	for (int i = 0; i < 100; ++i)
	{
		const hio::Scene s = oracle::random_scene(n, rng, 5);
		hio::DecodeConfig cfg;
		cfg.max_len = 10;
		const Tokens greedy = hio::greedy_decode(base, s, cfg.max_len).tokens;
		cfg.alpha = 0.0;
		decode_mismatch += hio::contrastive_decode(base, hio::LogitSource::evil_model(other), s, cfg).caption.tokens != greedy;
		cfg.alpha = 1.0;
		decode_mismatch += hio::contrastive_decode(base, hio::LogitSource::evil_model(clone), s, cfg).caption.tokens != greedy;
	}
	for (int i = 0; i < 100; ++i)
	{
		const int m = 3 + static_cast<int>(rng.below(4));
		const hio::ModelParams p = oracle::random_params(m, 1.0, rng);
		const hio::ModelParams r = oracle::random_params(m, 1.0, rng);
		const int k = 1 + static_cast<int>(rng.below(3));
		const hio::PreferenceRecord rec = oracle::random_record(m, rng, k);
		const hio::PreferenceRecord one = oracle::random_record(m, rng, 1);
		worst = std::max(worst,
			std::abs(hio::hio_loss(p, r, rec, 0.1, 0.0).value - hio::amth_loss(p, r, rec, 0.1).value));
		worst = std::max(
			worst, std::abs(hio::amth_loss(p, r, one, 0.1).value + std::log(hio::cbtm_prob(p, r, one, 0, 0.1))));
		worst = std::max(worst, std::abs(hio::dpo_loss(p, p, rec, 0.1).value - ln2));
		worst = std::max(worst, std::abs(hio::amth_loss(p, p, rec, 0.1).value - k * ln2));
	}
	return {decode_mismatch == 0 && worst <= tol,
		fmt("reduction identities: %d decode mismatches over 2 x 100 scenes, max loss deviation %.1e (<= 1e-12)",
			decode_mismatch, worst)};
}

// ---- 4: complement identity -----------------------------------------------

Outcome complement()
{
	hio::Rng rng(4004);
	double worst = 0.0;
	for (int i = 0; i < 1000; ++i)
	{
		const int m = 3 + static_cast<int>(rng.below(5));
		const hio::ModelParams p = oracle::random_params(m, 2.0, rng);
		const hio::ModelParams r = oracle::random_params(m, 2.0, rng);
		const hio::Scene s = oracle::random_scene(m, rng);
		const Tokens a = oracle::random_caption(m, rng), b = oracle::random_caption(m, rng);
		const double beta = rng.uniform(0.01, 2.0);
		worst = std::max(worst, std::abs(hio::cbtm_prob(p, r, s, a, b, beta) + hio::cbtm_prob(p, r, s, b, a, beta) - 1.0));
	}
	return {worst <= 1e-12, fmt("complement identity: max |p(a>b) + p(b>a) - 1| = %.1e (<= 1e-12) over 1000", worst)};
}

// ---- fixture runs ---------------------------------------------------------

struct FixtureRun
{
	fs::path dir;
	double total_seconds = 0.0;
	double evil_seconds = 0.0;
	std::string error;
};

FixtureRun run_fixture(const hio::RunConfig & base_cfg, const fs::path & dir)
{
	FixtureRun run{dir};
	hio::RunConfig cfg = base_cfg;
	cfg.out = dir.string();
	fs::remove_all(dir);
	const auto start = Clock::now();
	try
	{
		for (const char * stage : {"gen-data", "train-base", "mine"})
			hio::run_subcommand(stage, cfg, {});
		const auto evil_start = Clock::now();
		hio::run_subcommand("train-evil", cfg, {});
		run.evil_seconds = seconds_since(evil_start);
		for (auto mode : {hio::DecoderKind::greedy, hio::DecoderKind::vcd, hio::DecoderKind::evil_contrast})
		{
			hio::StageFlags f;
			f.mode = mode;
			hio::run_subcommand("decode", cfg, f);
		}
		for (const char * stage : {"eval", "check-condition", "trace-gap"})
			hio::run_subcommand(stage, cfg, {});
	}
	catch (const std::exception & e)
	{
		run.error = e.what();
	}
	run.total_seconds = seconds_since(start);
	return run;
}

std::vector<hio::PreferenceRecord> load_records(const fs::path & file)
{
	std::vector<hio::PreferenceRecord> out;
	for (const auto & j : hio::parse_ndjson(hio::read_text_file(file)))
		out.push_back(hio::record_from_json(j));
	return out;
}

// ---- 5: mining contract ---------------------------------------------------

Outcome mining_contract(const FixtureRun & run, const hio::RunConfig & cfg)
{
	if (!run.error.empty())
		return {false, "mining contract: fixture run failed: " + run.error};
	const hio::ModelParams base = hio::load_checkpoint(run.dir / "base/checkpoint.json");
	const auto records = load_records(run.dir / "mining/preferences.ndjson");
	const int k = cfg.loss.top_k;
	const hio::Vocab v = base.vocab();
	std::size_t candidates = 0, bad = 0;
	for (const auto & rec : records)
	{
		for (const auto & c : rec.candidates)
		{
			++candidates;
			bool ok = c.d >= 0 && c.d < static_cast<int>(rec.y_w.size()) && c.d < static_cast<int>(c.y_l.size());
			ok = ok && std::equal(rec.y_w.begin(), rec.y_w.begin() + c.d, c.y_l.begin());
			ok = ok && c.y_l[c.d] == c.h && rec.y_w[c.d] == c.c && c.h != c.c;
			ok = ok && hio::is_well_formed_caption(c.y_l, v);
			if (ok)
			{
				const hio::Token prev = c.d == 0 ? v.bos() : rec.y_w[c.d - 1];
				const Eigen::VectorXd l = oracle::logits(base, rec.scene, prev);
				int above = 0;
				for (int t = 0; t < v.size(); ++t)
					above += t != v.bos() && l(t) > l(c.h);
				ok = above < k;
			}
			bad += ok ? 0 : 1;
		}
	}
	return {!records.empty() && bad == 0,
		fmt("mining contract: %zu of %zu candidates (%zu records) violate an invariant (K = %d)", bad, candidates,
			records.size(), k)};
}

// ---- 6: margin trace and reversed preference ------------------------------

std::vector<double> trace_column(const fs::path & file, const std::string & column)
{
	std::ifstream in(file);
	std::string line;
	std::vector<std::string> header;
	std::vector<double> values;
	while (std::getline(in, line))
	{
		if (line.empty() || line[0] == '#')
			continue;
		std::vector<std::string> cells;
		std::stringstream ss(line);
		for (std::string cell; std::getline(ss, cell, ',');)
			cells.push_back(cell);
		if (header.empty())
		{
			header = cells;
			continue;
		}
		const auto it = std::find(header.begin(), header.end(), column);
		values.push_back(std::stod(cells.at(static_cast<std::size_t>(it - header.begin()))));
	}
	return values;
}

Outcome margin_trace(const FixtureRun & run, const hio::RunConfig & cfg)
{
	if (!run.error.empty())
		return {false, "margin trace: fixture run failed: " + run.error};
	const auto margins = trace_column(run.dir / "evil/hio/train_trace.csv", "mean_margin");
	if (margins.size() < 200)
		return {false, "margin trace: fewer than 200 training steps"};
	double head = 0.0, tail = 0.0;
	for (std::size_t i = 0; i < 100; ++i)
	{
		head += margins[i] / 100;
		tail += margins[margins.size() - 100 + i] / 100;
	}
	// Recomputed from the checkpoints with the oracle, not read from the summary.
	const hio::ModelParams base = hio::load_checkpoint(run.dir / "base/checkpoint.json");
	const hio::ModelParams evil = hio::load_checkpoint(run.dir / "evil/hio/checkpoint.json");
	const auto records = load_records(run.dir / "mining/preferences.ndjson");
	double p0 = 0.0, p1 = 0.0;
	std::size_t count = 0;
	for (const auto & rec : records)
		for (const auto & c : rec.candidates)
		{
			p0 += std::exp(-oracle::reverse_nll(base, base, rec, c, cfg.loss.beta));
			p1 += std::exp(-oracle::reverse_nll(evil, base, rec, c, cfg.loss.beta));
			++count;
		}
	p0 /= count;
	p1 /= count;
	return {tail > head && p1 > 0.55 && run.evil_seconds < 300,
		fmt("margin trace: last-100 mean margin %.4f vs first-100 %.4f; mean cbtm_prob %.4f -> %.4f (> 0.55); "
			"train-evil %.1f s (< 300 s)",
			tail, head, p0, p1, run.evil_seconds)};
}

// ---- 7: end-to-end mitigation ---------------------------------------------

struct MetricRow
{
	double chair_s = 0, chair_i = 0, recall = 0, f1 = 0;
};

std::map<std::string, MetricRow> metric_rows(const fs::path & csv)
{
	std::map<std::string, MetricRow> rows;
	const auto names = [&] {
		std::ifstream in(csv);
		std::vector<std::string> out;
		std::string line;
		while (std::getline(in, line))
			if (!line.empty() && line[0] != '#' && line.rfind("decoder,", 0) != 0)
				out.push_back(line.substr(0, line.find(',')));
		return out;
	}();
	const auto cs = trace_column(csv, "chair_s"), ci = trace_column(csv, "chair_i");
	const auto rc = trace_column(csv, "recall"), f1 = trace_column(csv, "f1");
	for (std::size_t i = 0; i < names.size(); ++i)
		rows[names[i]] = {cs[i], ci[i], rc[i], f1[i]};
	return rows;
}

std::pair<bool, std::string> compare_rows(const MetricRow & h, const MetricRow & g, const MetricRow & v)
{
	const bool ok = h.chair_s < g.chair_s && h.chair_i < g.chair_i && h.chair_s <= v.chair_s && h.chair_i <= v.chair_i &&
		std::abs(h.recall - g.recall) <= 0.05 && h.f1 > g.f1;
	return {ok, fmt("CHAIR_S %.4f (greedy %.4f, vcd %.4f), CHAIR_I %.4f (greedy %.4f, vcd %.4f), recall %.4f "
					"(greedy %.4f, |diff| <= 0.05), adversarial F1 %.4f (greedy %.4f)",
					h.chair_s, g.chair_s, v.chair_s, h.chair_i, g.chair_i, v.chair_i, h.recall, g.recall, h.f1, g.f1)};
}

Outcome mitigation(const FixtureRun & run)
{
	if (!run.error.empty())
		return {false, "end-to-end mitigation: fixture run failed: " + run.error};
	const auto rows = metric_rows(run.dir / "eval/metrics_adversarial.csv");
	if (!rows.count("greedy") || !rows.count("vcd") || !rows.count("evil-contrast"))
		return {false, "end-to-end mitigation: decoder rows missing from metrics"};
	const auto [ok, text] = compare_rows(rows.at("evil-contrast"), rows.at("greedy"), rows.at("vcd"));
	return {ok && run.total_seconds < 900,
		"end-to-end mitigation (alpha 1.0): " + text + fmt(", pipeline %.1f s (< 900 s)", run.total_seconds)};
}

// ---- 8: determinism -------------------------------------------------------

Outcome determinism(const FixtureRun & a, const FixtureRun & b)
{
	if (!a.error.empty() || !b.error.empty())
		return {false, "determinism: fixture run failed: " + a.error + b.error};
	std::size_t compared = 0;
	std::vector<std::string> differ;
	for (const auto & entry : fs::recursive_directory_iterator(a.dir))
	{
		if (!entry.is_regular_file())
			continue;
		const fs::path rel = fs::relative(entry.path(), a.dir);
		if (rel == "config.resolved.toml") // names its own output directory
			continue;
		++compared;
		const fs::path twin = b.dir / rel;
		if (!fs::exists(twin) || hio::read_text_file(entry.path()) != hio::read_text_file(twin))
			differ.push_back(rel.string());
	}
	std::string detail = fmt("determinism: %zu of %zu artifacts differ between two seeded runs", differ.size(), compared);
	if (!differ.empty())
		detail += " (first: " + differ.front() + ")";
	return {differ.empty() && compared > 0, detail};
}

// ---- 9: metric oracles ----------------------------------------------------

Outcome metric_oracles()
{
	const hio::Vocab v{3}; // A = 0, B = 1, C = 2, PERIOD = 3
	const hio::ChairReport c = hio::chair_metrics({{{0, {0, 1}}, {0, {0, 2, 3}}}}, v);
	// Two scenes over five objects (PERIOD = 5) giving tp 3, fp 1, tn 4, fn 2.
	const std::vector<hio::DecodedCaption> decodes{
		{{0, {0, 1, 2, 4}}, {0, {0, 1, 2, 3, 5}}}, {{1, {4}}, {1, {5}}}};
	const std::vector<hio::ProbeQuery> probes{{0, 0, true}, {0, 1, true}, {0, 2, true}, {0, 3, false}, {0, 4, true},
		{1, 4, true}, {1, 0, false}, {1, 1, false}, {1, 2, false}, {1, 3, false}};
	const hio::PopeReport p = hio::pope_metrics(decodes, probes);
	const bool chair_ok = c.chair_i == 1.0 / 2 && c.chair_s == 1.0 && c.recall == 1.0 / 2;
	// Exact: each value is the double nearest the rational.
	const bool pope_ok = p.tp == 3 && p.fp == 1 && p.tn == 4 && p.fn == 2 && p.accuracy == 7.0 / 10 && p.precision == 3.0 / 4 && p.recall == 3.0 / 5 && p.f1 == 2.0 / 3;
	return {chair_ok && pope_ok,
		fmt("metric oracles: chair_i %.17g chair_s %.17g recall %.17g; accuracy %.17g precision %.17g recall %.17g "
			"f1 %.17g",
			c.chair_i, c.chair_s, c.recall, p.accuracy, p.precision, p.recall, p.f1)};
}

} // namespace

int main(int argc, char ** argv)
{
	CLI::App app{"acceptance suite"};
	std::string work = (fs::temp_directory_path() / "hio_acceptance").string();
	std::string config = (fs::path(HIO_SOURCE_DIR) / "configs/default.toml").string();
	std::vector<int> expect_red;
	bool keep = false, verbose = false;
	app.add_option("--work-dir", work, "scratch directory for the two fixture runs");
	app.add_option("--config", config, "fixture configuration");
	app.add_option("--expect-red", expect_red, "criteria known to fail")->delimiter(',');
	app.add_flag("--keep", keep, "keep the fixture runs");
	app.add_flag("-v,--verbose", verbose, "show stage logs");
	CLI11_PARSE(app, argc, argv);
	if (!verbose)
		hio::logger()->set_level(spdlog::level::warn);

	const hio::RunConfig cfg = hio::parse_config(config);
	std::map<int, Outcome> results;
	results[1] = gradients();
	results[2] = implication();
	results[3] = reductions();
	results[4] = complement();

	const FixtureRun a = run_fixture(cfg, fs::path(work) / "run_a");
	const FixtureRun b = run_fixture(cfg, fs::path(work) / "run_b");
	results[5] = mining_contract(a, cfg);
	results[6] = margin_trace(a, cfg);
	results[7] = mitigation(a);
	results[8] = determinism(a, b);
	results[9] = metric_oracles();

	std::set<int> failed;
	for (const auto & [id, r] : results)
	{
		std::printf("criterion %d %s  %s\n", id, r.pass ? "PASS" : "FAIL", r.detail.c_str());
		if (!r.pass)
			failed.insert(id);
	}

	// Informational only: the same comparison at a weaker contrast strength.
	if (a.error.empty())
	{
		try
		{
			hio::RunConfig c = cfg;
			c.out = a.dir.string();
			hio::StageFlags f;
			f.mode = hio::DecoderKind::evil_contrast;
			f.alpha = 0.1;
			hio::run_subcommand("decode", c, f);
			hio::run_subcommand("eval", c, {});
			const auto rows = metric_rows(a.dir / "eval/metrics_adversarial.csv");
			const std::string name = hio::Pipeline::decoder_name(c, hio::DecoderKind::evil_contrast, 0.1, c.loss.kind);
			const auto [ok, text] = compare_rows(rows.at(name), rows.at("greedy"), rows.at("vcd"));
			std::printf("info        %s  criterion 7 comparisons at alpha 0.1 (not counted): %s\n",
				ok ? "would pass" : "would fail", text.c_str());
		}
		catch (const std::exception & e)
		{
			std::printf("info        alpha 0.1 comparison could not run: %s\n", e.what());
		}
	}

	const std::set<int> expected(expect_red.begin(), expect_red.end());
	std::printf("acceptance: %zu of %zu criteria pass", results.size() - failed.size(), results.size());
	if (!expected.empty())
	{
		std::printf("; expected red:");
		for (int id : expected)
			std::printf(" %d", id);
	}
	std::printf("\n");
	if (!keep)
		fs::remove_all(work);
	return failed == expected ? 0 : 1;
}
