#pragma once

#include <cstdint>
#include <vector>

#include "prunerank/evaluator.hpp"
#include "prunerank/labeler.hpp"

namespace prunerank {

// Deterministic training set whose relevant and irrelevant sentences draw
// words from letter-disjoint vocabularies, with every relevant word carrying
// a 3-gram planted in the query. Teacher scores grow linearly with the share
// of relevant sentences, so both heads of the joint objective are learnable.
std::vector<TrainingExample> make_separable_training_set(size_t n, uint64_t seed);

// Deterministic English/French QA set. Each record has three passages; one
// hides a single answer-bearing sentence between distractor sentences whose
// vocabulary shares no character 3-gram with the query, so pruning at
// mid-range thresholds removes most text while keeping the answer reachable.
std::vector<EvalRecord> make_bilingual_qa_set(size_t n, uint64_t seed);

}  // namespace prunerank
