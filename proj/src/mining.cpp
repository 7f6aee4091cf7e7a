#include "hio/mining.hpp"

#include <algorithm>
#include <numeric>

#include "hio/decoding.hpp"
#include "hio/error.hpp"

namespace hio
{

std::vector<int> divergence_indices(std::span<const Token> y_prime, std::span<const Token> y_star)
{
	const std::size_t shared = std::min(y_prime.size(), y_star.size());
	std::vector<int> out;
	for (std::size_t t = 0; t < shared; ++t)
		if (y_prime[t] != y_star[t])
			out.push_back(static_cast<int>(t));
	if (out.empty() && y_prime.size() != y_star.size())
		out.push_back(static_cast<int>(shared));
	return out;
}

std::vector<Token> topk_tokens(const LogitVector & logits, int k, const Vocab & vocab)
{
	if (k < 1 || k > vocab.size() - 1 || logits.size() != vocab.size())
		throw Error("invalid-argument", "K must lie in [1, N-1] for N = " + std::to_string(vocab.size()));
	std::vector<Token> order;
	for (Token t = 0; t < vocab.size(); ++t)
		if (t != vocab.bos())
			order.push_back(t);
	std::stable_sort(order.begin(), order.end(), [&](Token a, Token b) { return logits(a) > logits(b); });
	order.resize(static_cast<std::size_t>(k));
	return order;
}

Tokens greedy_continuation(const ModelParams & params, const Scene & scene, std::span<const Token> prefix, int max_len)
{
	if (!prefix.empty() && prefix.back() == params.vocab().period())
		throw Error("bad-sequence", "prefix already ends with PERIOD");
	return greedy_extend(params, scene, prefix, max_len);
}

std::vector<PreferenceRecord> mine_preferences(
	const ModelParams & params, const std::vector<AnnotatedPair> & pairs, int k, int max_len)
{
	if (k < 1)
		throw Error("invalid-argument", "K must be at least 1");
	const Vocab vocab = params.vocab();
	std::vector<PreferenceRecord> records;
	for (const AnnotatedPair & pair : pairs)
	{
		const Tokens & y_star = pair.y_star.tokens;
		for (int d : divergence_indices(pair.y_prime.tokens, y_star))
		{
			if (static_cast<std::size_t>(d) >= y_star.size())
				continue; // y_star is a strict prefix of y_prime: no target token at d
			const std::span<const Token> shared(y_star.data(), static_cast<std::size_t>(d));
			const Token target = y_star[d];
			PreferenceRecord record{pair.scene, y_star, {}};
			for (Token h : topk_tokens(step_logits(params, pair.scene, shared), k, vocab))
			{
				if (h == target)
					continue;
				Candidate cand{Tokens(shared.begin(), shared.end()), d, h, target};
				cand.y_l.push_back(h);
				if (h != vocab.period())
				{
					const int budget = std::max(1, max_len - d - 1);
					const Tokens suffix = greedy_continuation(params, pair.scene, cand.y_l, budget);
					cand.y_l.insert(cand.y_l.end(), suffix.begin(), suffix.end());
				}
				const bool duplicate = std::any_of(record.candidates.begin(), record.candidates.end(),
					[&](const Candidate & other) { return other.y_l == cand.y_l; });
				if (!duplicate && cand.y_l != y_star)
					record.candidates.push_back(std::move(cand));
			}
			if (!record.candidates.empty())
				records.push_back(std::move(record));
		}
	}
	return records;
}

std::vector<AnnotatedPair> build_annotations(
	const ModelParams & base_params, const std::vector<CorpusEntry> & corpus, int max_len)
{
	std::vector<AnnotatedPair> pairs;
	for (const CorpusEntry & entry : corpus)
	{
		CaptionExample y_prime = greedy_decode(base_params, entry.scene, max_len);
		if (y_prime.tokens == entry.reference.tokens)
			continue;
		pairs.push_back({entry.scene, std::move(y_prime), entry.reference});
	}
	return pairs;
}

} // namespace hio
