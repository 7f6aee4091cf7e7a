#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hio/config.hpp"
#include "hio/io.hpp"

namespace hio
{

enum class DecoderKind
{
	greedy,
	sample,
	vcd,
	evil_contrast
};

std::string to_string(DecoderKind kind);
DecoderKind decoder_from_string(const std::string & name);

// Per-stage overrides supplied on the command line.
struct StageFlags
{
	std::optional<LossKind> loss;
	std::optional<DecoderKind> mode;
	std::optional<double> alpha;
	std::optional<std::string> decoder; // check-condition target
};

// Output directory layout, one subdirectory per stage:
//   data/ base/ mining/ evil/<loss>/ decode/<name>/ eval/ audit/ trace/
class Pipeline
{
public:
	explicit Pipeline(RunConfig cfg);

	const RunConfig & config() const { return cfg_; }
	const std::filesystem::path & out() const { return out_; }

	void gen_data();
	void train_base();
	void mine();
	void train_evil(LossKind kind);
	// Returns the decode directory name.
	std::string decode(DecoderKind kind, double alpha, LossKind evil_kind);
	void eval();
	void check_condition(const std::string & decoder);
	void trace_gap();
	void run_all();

	static std::string decoder_name(const RunConfig & cfg, DecoderKind kind, double alpha, LossKind evil_kind);

private:
	Provenance provenance(const std::string & stage) const;
	std::filesystem::path fresh_stage_dir(const std::filesystem::path & relative) const;
	std::filesystem::path require(const std::filesystem::path & relative, const std::string & stage) const;
	void echo_resolved_config() const;

	RunConfig cfg_;
	std::filesystem::path out_;
	std::string hash_;
};

// Exclusive lock on an output directory for the lifetime of the object.
class OutputLock
{
public:
	explicit OutputLock(const std::filesystem::path & out);
	~OutputLock();
	OutputLock(const OutputLock &) = delete;
	OutputLock & operator=(const OutputLock &) = delete;

private:
	std::filesystem::path path_;
};

const std::vector<std::string> & subcommand_names();

// Runs one stage under the output lock. Throws hio::Error on stage failure.
void run_subcommand(const std::string & name, const RunConfig & cfg, const StageFlags & flags);

} // namespace hio
