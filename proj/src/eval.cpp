#include "hio/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "hio/error.hpp"
#include "hio/format.hpp"

namespace hio
{

ChairReport chair_metrics(const std::vector<DecodedCaption> & decodes, const Vocab & vocab)
{
	if (decodes.empty())
		throw Error("invalid-argument", "chair_metrics needs at least one caption");
	ChairReport r;
	double recall_sum = 0.0;
	std::int64_t length_sum = 0;
	for (const DecodedCaption & item : decodes)
	{
		std::set<int> covered;
		bool hallucinated = false;
		for (Token t : item.caption.tokens)
		{
			if (!vocab.is_object(t))
				continue;
			++r.n_mentions;
			++length_sum;
			if (item.scene.contains(t))
				covered.insert(t);
			else
			{
				++r.n_hallucinated_mentions;
				hallucinated = true;
			}
		}
		++r.n_captions;
		r.n_hallucinated_captions += hallucinated ? 1 : 0;
		recall_sum += static_cast<double>(covered.size()) / static_cast<double>(item.scene.objects.size());
	}
	const auto n = static_cast<double>(r.n_captions);
	r.chair_s = static_cast<double>(r.n_hallucinated_captions) / n;
	r.chair_i = r.n_mentions == 0 ? 0.0 : static_cast<double>(r.n_hallucinated_mentions) / static_cast<double>(r.n_mentions);
	r.recall = recall_sum / n;
	r.avg_len = static_cast<double>(length_sum) / n;
	return r;
}

PopeReport pope_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn)
{
	PopeReport r{0, 0, 0, 0, tp, fp, tn, fn};
	const std::int64_t total = tp + fp + tn + fn;
	r.accuracy = total == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total);
	r.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
	r.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
	// Same value as 2PR/(P+R), but one rounding instead of several.
	r.f1 = tp == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
	return r;
}

PopeReport pope_metrics(const std::vector<DecodedCaption> & decodes, const std::vector<ProbeQuery> & probes)
{
	std::map<std::uint64_t, const CaptionExample *> by_scene;
	for (const DecodedCaption & item : decodes)
		by_scene[item.scene.id] = &item.caption;
	std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
	for (const ProbeQuery & probe : probes)
	{
		const auto it = by_scene.find(probe.scene_id);
		if (it == by_scene.end())
			throw Error("missing-decode", "no decode for scene " + std::to_string(probe.scene_id));
		const Tokens & tokens = it->second->tokens;
		const bool yes = std::find(tokens.begin(), tokens.end(), probe.object_id) != tokens.end();
		if (probe.present)
			(yes ? tp : fn) += 1;
		else
			(yes ? fp : tn) += 1;
	}
	return pope_from_counts(tp, fp, tn, fn);
}

std::vector<CompareRow> compare_report(
	const std::vector<NamedDecodes> & decoders, const std::vector<ProbeQuery> & probes, const Vocab & vocab)
{
	if (decoders.empty())
		throw Error("invalid-argument", "compare_report needs at least one decoder");
	const auto split_of = [](const NamedDecodes & d) {
		std::vector<std::uint64_t> ids;
		for (const DecodedCaption & item : d.decodes)
			ids.push_back(item.scene.id);
		std::sort(ids.begin(), ids.end());
		return ids;
	};
	const auto split = split_of(decoders.front());
	std::vector<CompareRow> rows;
	for (const NamedDecodes & d : decoders)
	{
		if (split_of(d) != split)
			throw Error("split-mismatch", "decoder '" + d.name + "' was run on a different eval split");
		rows.push_back({d.name, chair_metrics(d.decodes, vocab), pope_metrics(d.decodes, probes)});
	}
	return rows;
}

namespace
{

const std::vector<std::string> & columns()
{
	static const std::vector<std::string> names{
		"decoder", "chair_s", "chair_i", "recall", "avg_len", "accuracy", "precision", "pope_recall", "f1"};
	return names;
}

std::vector<std::string> cells(const CompareRow & row)
{
	return {row.decoder, format_double(row.chair.chair_s), format_double(row.chair.chair_i),
		format_double(row.chair.recall), format_double(row.chair.avg_len), format_double(row.pope.accuracy),
		format_double(row.pope.precision), format_double(row.pope.recall), format_double(row.pope.f1)};
}

} // namespace

std::string compare_csv(const std::vector<CompareRow> & rows)
{
	std::ostringstream out;
	const auto & names = columns();
	for (std::size_t i = 0; i < names.size(); ++i)
		out << (i ? "," : "") << names[i];
	out << '\n';
	for (const CompareRow & row : rows)
	{
		const auto values = cells(row);
		for (std::size_t i = 0; i < values.size(); ++i)
			out << (i ? "," : "") << values[i];
		out << '\n';
	}
	return out.str();
}

std::string compare_table(const std::vector<CompareRow> & rows)
{
	std::vector<std::vector<std::string>> grid{columns()};
	for (const CompareRow & row : rows)
	{
		std::vector<std::string> line{row.decoder};
		for (double v : {row.chair.chair_s, row.chair.chair_i, row.chair.recall, row.chair.avg_len, row.pope.accuracy,
				 row.pope.precision, row.pope.recall, row.pope.f1})
		{
			std::ostringstream cell;
			cell << std::fixed << std::setprecision(4) << v;
			line.push_back(cell.str());
		}
		grid.push_back(std::move(line));
	}
	std::vector<std::size_t> width(columns().size(), 0);
	for (const auto & line : grid)
		for (std::size_t i = 0; i < line.size(); ++i)
			width[i] = std::max(width[i], line[i].size());
	std::ostringstream out;
	for (const auto & line : grid)
	{
		for (std::size_t i = 0; i < line.size(); ++i)
		{
			if (i == 0)
				out << std::left << std::setw(static_cast<int>(width[i])) << line[i];
			else
				out << "  " << std::right << std::setw(static_cast<int>(width[i])) << line[i];
		}
		out << '\n';
	}
	return out.str();
}

} // namespace hio
