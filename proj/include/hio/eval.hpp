#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hio/types.hpp"
#include "hio/world.hpp"

namespace hio
{

struct DecodedCaption
{
	Scene scene;
	CaptionExample caption;
};

struct ChairReport
{
	double chair_s = 0.0;
	double chair_i = 0.0;
	double recall = 0.0;
	double avg_len = 0.0;
	std::int64_t n_captions = 0;
	std::int64_t n_hallucinated_captions = 0;
	std::int64_t n_mentions = 0;
	std::int64_t n_hallucinated_mentions = 0;
};

ChairReport chair_metrics(const std::vector<DecodedCaption> & decodes, const Vocab & vocab);

struct PopeReport
{
	double accuracy = 0.0;
	double precision = 0.0;
	double recall = 0.0;
	double f1 = 0.0;
	std::int64_t tp = 0;
	std::int64_t fp = 0;
	std::int64_t tn = 0;
	std::int64_t fn = 0;
};

PopeReport pope_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn);
PopeReport pope_metrics(const std::vector<DecodedCaption> & decodes, const std::vector<ProbeQuery> & probes);

struct NamedDecodes
{
	std::string name;
	std::vector<DecodedCaption> decodes;
};

struct CompareRow
{
	std::string decoder;
	ChairReport chair;
	PopeReport pope;
};

std::vector<CompareRow> compare_report(
	const std::vector<NamedDecodes> & decoders, const std::vector<ProbeQuery> & probes, const Vocab & vocab);

std::string compare_csv(const std::vector<CompareRow> & rows);
std::string compare_table(const std::vector<CompareRow> & rows);

} // namespace hio
