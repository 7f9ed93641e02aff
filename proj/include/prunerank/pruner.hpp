#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "prunerank/scorer.hpp"
#include "prunerank/segmenter.hpp"

namespace prunerank {

enum class CompressionBasis { characters, tokens };

std::string_view to_string(CompressionBasis basis);
CompressionBasis compression_basis_from_string(std::string_view name);

struct PruningOptions {
  double threshold = 0.5;
  bool always_keep_first = false;
  CompressionBasis basis = CompressionBasis::characters;
};

struct PrunedPassage {
  std::vector<size_t> kept;  // ascending sentence indices
  std::string pruned_text;
  double compression = 0.0;  // 1 - kept/total, in [0, 1]
  double passage_score = 0.0;
};

// Keep-flags per token value: 1 iff value >= threshold.
std::vector<int> binarize(const std::vector<double>& values, double threshold);

// Majority vote per sentence: keep iff strictly more than half of the
// sentence's tokens are flagged. Sentences without tokens are dropped.
std::vector<int> decide_sentences(const std::vector<int>& token_mask,
                                  const std::vector<size_t>& alignment, size_t n_sentences);

// Scores the whole passage once, then drops sentences whose flagged-token
// share does not exceed one half.
PrunedPassage prune(std::string_view query, const SegmentedPassage& passage, Scorer& scorer,
                    const PruningOptions& options = {});
PrunedPassage prune(std::string_view query, const SegmentedPassage& passage,
                    const ScorerConfig& config, const PruningOptions& options = {});

// Baseline that scores every sentence independently and keeps those whose
// score strictly exceeds the threshold, in original order.
PrunedPassage dslr_prune(std::string_view query, const SegmentedPassage& passage, Scorer& scorer,
                         double threshold,
                         CompressionBasis basis = CompressionBasis::characters);

// Mean compression over a non-empty batch.
double batch_compression(const std::vector<PrunedPassage>& batch);

}  // namespace prunerank
