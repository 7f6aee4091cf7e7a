#include <CLI11/CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "hio/config.hpp"
#include "hio/error.hpp"
#include "hio/log.hpp"
#include "hio/pipeline.hpp"

namespace
{

constexpr int exit_usage = 1;
constexpr int exit_stage = 2;

struct Options
{
	std::string config;
	std::string out;
	std::uint64_t seed = 0;
	std::string loss;
	std::string mode;
	double alpha = 0.0;
	std::string decoder;
};

void add_common(CLI::App & sub, Options & opt)
{
	sub.add_option("--config", opt.config, "TOML run configuration")->required();
	sub.add_option("--out", opt.out, "output directory (overrides [paths] out)");
	sub.add_option("--seed", opt.seed, "global seed (overrides config)");
}

bool given(const CLI::App & sub, const std::string & flag)
{
	const CLI::Option * o = sub.get_option_no_throw(flag);
	return o != nullptr && o->count() > 0;
}

} // namespace

int main(int argc, char ** argv)
{
	CLI::App app{"hio-lab: hallucination-induced optimization on a synthetic caption world"};
	app.require_subcommand(1);
	Options opt;

	const std::map<std::string, std::string> about{
		{"gen-data", "sample the world, training corpus, eval scenes and probes"},
		{"train-base", "fit the base captioner by maximum likelihood"},
		{"mine", "mine preference records from base decodes"},
		{"train-evil", "train the hallucination-amplifying model"},
		{"decode", "caption the eval scenes"},
		{"eval", "CHAIR and POPE metrics for every decode"},
		{"check-condition", "audit the contrast conditions per decode step"},
		{"trace-gap", "collect the margin trace of each trained evil model"},
		{"pipeline", "run every stage in order"},
	};
	std::map<std::string, CLI::App *> subs;
	for (const std::string & name : hio::subcommand_names())
	{
		const auto it = about.find(name);
		CLI::App * sub = app.add_subcommand(name, it == about.end() ? "" : it->second);
		add_common(*sub, opt);
		subs[name] = sub;
	}
	subs["train-evil"]->add_option("--loss", opt.loss, "dpo|cbtm|amth|hio");
	subs["decode"]->add_option("--mode", opt.mode, "greedy|sample|vcd|evil-contrast");
	subs["decode"]->add_option("--alpha", opt.alpha, "contrast strength");
	subs["decode"]->add_option("--loss", opt.loss, "evil model used by evil-contrast");
	subs["check-condition"]->add_option("--decoder", opt.decoder, "decode directory name to audit");
	subs["check-condition"]->add_option("--alpha", opt.alpha, "alpha used to name the default decoder");
	subs["check-condition"]->add_option("--loss", opt.loss, "loss used to name the default decoder");

	try
	{
		app.parse(argc, argv);
	}
	catch (const CLI::ParseError & e)
	{
		const int code = app.exit(e);
		return code == 0 ? 0 : exit_usage;
	}

	const CLI::App * chosen = app.get_subcommands().front();
	const std::string name = chosen->get_name();

	hio::RunConfig cfg;
	hio::StageFlags flags;
	try
	{
		cfg = hio::parse_config(opt.config);
		if (given(*chosen, "--out"))
			cfg.out = opt.out;
		if (given(*chosen, "--seed"))
			cfg.seed = opt.seed;
		hio::validate_config(cfg);
		if (!opt.loss.empty())
			flags.loss = hio::loss_kind_from_string(opt.loss);
		if (!opt.mode.empty())
			flags.mode = hio::decoder_from_string(opt.mode);
		if (given(*chosen, "--alpha"))
			flags.alpha = opt.alpha;
		if (!opt.decoder.empty())
			flags.decoder = opt.decoder;
	}
	catch (const hio::Error & e)
	{
		hio::logger()->error("{}", e.what());
		return exit_usage;
	}

	try
	{
		hio::run_subcommand(name, cfg, flags);
	}
	catch (const std::exception & e)
	{
		hio::logger()->error("{} failed: {}", name, e.what());
		return exit_stage;
	}
	return EXIT_SUCCESS;
}
