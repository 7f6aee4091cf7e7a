#pragma once

#include <span>
#include <vector>

#include "hio/losses.hpp"
#include "hio/model.hpp"
#include "hio/world.hpp"

namespace hio
{

struct AnnotatedPair
{
	Scene scene;
	CaptionExample y_prime; // model output, possibly hallucinated
	CaptionExample y_star;  // reference

	bool operator==(const AnnotatedPair &) const = default;
};

std::vector<int> divergence_indices(std::span<const Token> y_prime, std::span<const Token> y_star);

// K highest-logit non-BOS tokens in descending order, lowest id first on ties.
std::vector<Token> topk_tokens(const LogitVector & logits, int k, const Vocab & vocab);

Tokens greedy_continuation(const ModelParams & params, const Scene & scene, std::span<const Token> prefix, int max_len);

std::vector<PreferenceRecord> mine_preferences(
	const ModelParams & params, const std::vector<AnnotatedPair> & pairs, int k, int max_len);

std::vector<AnnotatedPair> build_annotations(
	const ModelParams & base_params, const std::vector<CorpusEntry> & corpus, int max_len);

} // namespace hio
