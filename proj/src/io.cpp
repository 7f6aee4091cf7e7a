#include "hio/io.hpp"

#include <fstream>
#include <sstream>

#include "hio/error.hpp"
#include "hio/format.hpp"

namespace hio
{

using nlohmann::json;

json to_json(const Provenance & p)
{
	return {{"config_hash", p.config_hash}, {"seed", p.seed}, {"stage", p.stage}, {"format_version", p.format_version}};
}

Provenance provenance_from_json(const json & j)
{
	return {j.at("config_hash").get<std::string>(), j.at("seed").get<std::uint64_t>(), j.at("stage").get<std::string>(),
		j.at("format_version").get<int>()};
}

std::string csv_provenance_line(const Provenance & p)
{
	return "# " + to_json(p).dump() + "\n";
}

void write_text_file(const std::filesystem::path & path, const std::string & content)
{
	if (path.has_parent_path())
		std::filesystem::create_directories(path.parent_path());
	std::ofstream out(path, std::ios::binary | std::ios::trunc);
	if (!out)
		throw Error("io-error", "cannot write " + path.string());
	out << content;
	if (!out)
		throw Error("io-error", "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path & path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in)
		throw Error("missing-artifact", "cannot read " + path.string());
	std::ostringstream buffer;
	buffer << in.rdbuf();
	return buffer.str();
}

std::string to_ndjson(const Provenance & p, const std::vector<json> & records)
{
	std::string out = json{{"provenance", to_json(p)}}.dump();
	out += '\n';
	for (const json & record : records)
	{
		out += record.dump();
		out += '\n';
	}
	return out;
}

std::vector<json> parse_ndjson(const std::string & text, Provenance * provenance)
{
	std::vector<json> records;
	std::istringstream in(text);
	std::string line;
	while (std::getline(in, line))
	{
		if (line.empty())
			continue;
		json j = json::parse(line);
		if (j.is_object() && j.size() == 1 && j.contains("provenance"))
		{
			if (provenance != nullptr)
				*provenance = provenance_from_json(j["provenance"]);
			continue;
		}
		records.push_back(std::move(j));
	}
	return records;
}

json to_json(const Scene & scene)
{
	return scene.objects;
}

namespace
{

Scene scene_from(std::uint64_t id, const json & objects)
{
	return {id, objects.get<std::vector<int>>()};
}

} // namespace

json to_json(const CorpusEntry & entry)
{
	return {{"scene_id", entry.scene.id}, {"scene", entry.scene.objects}, {"caption", entry.biased.tokens},
		{"reference", entry.reference.tokens}};
}

CorpusEntry corpus_entry_from_json(const json & j)
{
	const auto id = j.at("scene_id").get<std::uint64_t>();
	return {scene_from(id, j.at("scene")), {id, j.at("caption").get<Tokens>()}, {id, j.at("reference").get<Tokens>()}};
}

json to_json(const ProbeQuery & probe)
{
	return {{"scene_id", probe.scene_id}, {"object", probe.object_id}, {"label", probe.present ? "present" : "absent"},
		{"mode", to_string(probe.mode)}};
}

ProbeQuery probe_from_json(const json & j)
{
	const auto label = j.at("label").get<std::string>();
	if (label != "present" && label != "absent")
		throw Error("bad-artifact", "probe label must be present|absent");
	return {j.at("scene_id").get<std::uint64_t>(), j.at("object").get<int>(), label == "present",
		probe_mode_from_string(j.at("mode").get<std::string>())};
}

json to_json(const PreferenceRecord & record)
{
	json candidates = json::array();
	for (const Candidate & c : record.candidates)
		candidates.push_back({{"y_l", c.y_l}, {"d", c.d}, {"h", c.h}, {"c", c.c}});
	return {{"scene_id", record.scene.id}, {"scene", record.scene.objects}, {"y_w", record.y_w},
		{"candidates", std::move(candidates)}};
}

PreferenceRecord record_from_json(const json & j)
{
	PreferenceRecord record;
	record.scene = scene_from(j.value("scene_id", std::uint64_t{0}), j.at("scene"));
	record.y_w = j.at("y_w").get<Tokens>();
	for (const json & c : j.at("candidates"))
		record.candidates.push_back(
			{c.at("y_l").get<Tokens>(), c.at("d").get<int>(), c.at("h").get<Token>(), c.at("c").get<Token>()});
	return record;
}

json to_json(const AnnotatedPair & pair)
{
	return {{"scene_id", pair.scene.id}, {"scene", pair.scene.objects}, {"y_prime", pair.y_prime.tokens},
		{"y_star", pair.y_star.tokens}};
}

AnnotatedPair annotated_pair_from_json(const json & j)
{
	const auto id = j.at("scene_id").get<std::uint64_t>();
	return {scene_from(id, j.at("scene")), {id, j.at("y_prime").get<Tokens>()}, {id, j.at("y_star").get<Tokens>()}};
}

json to_json(const DecodedCaption & item)
{
	return {{"scene_id", item.scene.id}, {"scene", item.scene.objects}, {"caption", item.caption.tokens}};
}

DecodedCaption decoded_from_json(const json & j)
{
	const auto id = j.at("scene_id").get<std::uint64_t>();
	return {scene_from(id, j.at("scene")), {id, j.at("caption").get<Tokens>()}};
}

namespace
{

json vector_json(const Eigen::VectorXd & v)
{
	return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from(const json & j)
{
	const auto values = j.get<std::vector<double>>();
	return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_json(const Eigen::MatrixXd & m)
{
	json rows = json::array();
	for (Eigen::Index r = 0; r < m.rows(); ++r)
		rows.push_back(vector_json(m.row(r).transpose()));
	return rows;
}

Eigen::MatrixXd matrix_from(const json & j, Eigen::Index rows, Eigen::Index cols)
{
	if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
		throw Error("bad-artifact", "checkpoint matrix has the wrong row count");
	Eigen::MatrixXd m(rows, cols);
	for (Eigen::Index r = 0; r < rows; ++r)
	{
		const Eigen::VectorXd row = vector_from(j[static_cast<std::size_t>(r)]);
		if (row.size() != cols)
			throw Error("bad-artifact", "checkpoint matrix has the wrong column count");
		m.row(r) = row.transpose();
	}
	return m;
}

} // namespace

json trace_step_json(std::uint64_t scene_id, const TraceStep & step)
{
	return {{"scene_id", scene_id}, {"step", step.step}, {"base", vector_json(step.base)},
		{"amplified", vector_json(step.amplified)}, {"delta", vector_json(step.delta)}, {"chosen", step.chosen}};
}

TraceStep trace_step_from_json(const json & j, std::uint64_t * scene_id)
{
	if (scene_id != nullptr)
		*scene_id = j.value("scene_id", std::uint64_t{0});
	return {j.at("step").get<int>(), vector_from(j.at("base")), vector_from(j.at("amplified")),
		vector_from(j.at("delta")), j.at("chosen").get<Token>()};
}

json checkpoint_json(const ModelParams & params, const Provenance & p)
{
	return {{"format_version", format_version}, {"n_objects", params.n_objects}, {"V", params.vocab_size()},
		{"A", matrix_json(params.A)}, {"B", matrix_json(params.B)}, {"c", vector_json(params.c)},
		{"provenance", to_json(p)}};
}

ModelParams params_from_checkpoint(const json & j, Provenance * provenance)
{
	if (j.at("format_version").get<int>() != format_version)
		throw Error("bad-artifact", "unsupported checkpoint format_version");
	const int n = j.at("n_objects").get<int>();
	const int v = j.at("V").get<int>();
	if (n < 1 || v != n + 2)
		throw Error("bad-artifact", "checkpoint V must equal n_objects + 2");
	ModelParams params{n, matrix_from(j.at("A"), n, v), matrix_from(j.at("B"), v, v), vector_from(j.at("c"))};
	if (params.c.size() != v || !params.all_finite())
		throw Error("bad-artifact", "checkpoint bias vector malformed");
	if (provenance != nullptr && j.contains("provenance"))
		*provenance = provenance_from_json(j["provenance"]);
	return params;
}

void save_checkpoint(const std::filesystem::path & path, const ModelParams & params, const Provenance & p)
{
	write_text_file(path, checkpoint_json(params, p).dump() + "\n");
}

ModelParams load_checkpoint(const std::filesystem::path & path, Provenance * provenance)
{
	return params_from_checkpoint(json::parse(read_text_file(path)), provenance);
}

std::string train_trace_csv(const TrainTrace & trace, const Provenance & p)
{
	std::string out = csv_provenance_line(p) + "step,loss,mean_margin,grad_norm\n";
	for (const TraceRecord & r : trace)
		out += std::to_string(r.step) + "," + format_double(r.loss) + "," + format_double(r.mean_margin) + "," +
			format_double(r.grad_norm) + "\n";
	return out;
}

std::string audit_csv(const std::vector<std::uint64_t> & scene_ids, const AuditReport & report, const Provenance & p)
{
	if (scene_ids.size() != report.steps.size())
		throw Error("invalid-argument", "one scene id per audit step required");
	std::string out = csv_provenance_line(p) + "scene_id,step,chosen_token,is_hallucination,exact_ok,necessary_ok,lhs,J,vacuous\n";
	for (std::size_t i = 0; i < report.steps.size(); ++i)
	{
		const AuditStep & s = report.steps[i];
		out += std::to_string(scene_ids[i]) + "," + std::to_string(s.step) + "," + std::to_string(s.chosen) + "," +
			(s.is_hallucination ? "1" : "0") + "," + (s.exact_ok ? "1" : "0") + "," + (s.necessary_ok ? "1" : "0") +
			"," + format_double(s.lhs) + "," + format_double(s.J) + "," + (s.vacuous ? "1" : "0") + "\n";
	}
	return out;
}

} // namespace hio
