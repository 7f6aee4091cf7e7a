#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hio/decoding.hpp"
#include "hio/eval.hpp"
#include "hio/losses.hpp"
#include "hio/mining.hpp"
#include "hio/model.hpp"
#include "hio/theory.hpp"
#include "hio/training.hpp"
#include "hio/world.hpp"

namespace hio
{

inline constexpr int format_version = 1;

struct Provenance
{
	std::string config_hash;
	std::uint64_t seed = 0;
	std::string stage;
	int format_version = hio::format_version;

	bool operator==(const Provenance &) const = default;
};

nlohmann::json to_json(const Provenance & p);
Provenance provenance_from_json(const nlohmann::json & j);

// CSV files start with a "# {json provenance}" comment line.
std::string csv_provenance_line(const Provenance & p);

void write_text_file(const std::filesystem::path & path, const std::string & content);
std::string read_text_file(const std::filesystem::path & path);

// Newline-delimited JSON with a leading {"provenance": ...} line.
std::string to_ndjson(const Provenance & p, const std::vector<nlohmann::json> & records);
std::vector<nlohmann::json> parse_ndjson(const std::string & text, Provenance * provenance = nullptr);

nlohmann::json to_json(const Scene & scene);
nlohmann::json to_json(const CorpusEntry & entry);
CorpusEntry corpus_entry_from_json(const nlohmann::json & j);
nlohmann::json to_json(const ProbeQuery & probe);
ProbeQuery probe_from_json(const nlohmann::json & j);
nlohmann::json to_json(const PreferenceRecord & record);
PreferenceRecord record_from_json(const nlohmann::json & j);
nlohmann::json to_json(const AnnotatedPair & pair);
AnnotatedPair annotated_pair_from_json(const nlohmann::json & j);
nlohmann::json to_json(const DecodedCaption & item);
DecodedCaption decoded_from_json(const nlohmann::json & j);
nlohmann::json trace_step_json(std::uint64_t scene_id, const TraceStep & step);
TraceStep trace_step_from_json(const nlohmann::json & j, std::uint64_t * scene_id = nullptr);

nlohmann::json checkpoint_json(const ModelParams & params, const Provenance & p);
ModelParams params_from_checkpoint(const nlohmann::json & j, Provenance * provenance = nullptr);
void save_checkpoint(const std::filesystem::path & path, const ModelParams & params, const Provenance & p);
ModelParams load_checkpoint(const std::filesystem::path & path, Provenance * provenance = nullptr);

std::string train_trace_csv(const TrainTrace & trace, const Provenance & p);
std::string audit_csv(const std::vector<std::uint64_t> & scene_ids, const AuditReport & report, const Provenance & p);

} // namespace hio
