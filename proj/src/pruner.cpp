#include "prunerank/pruner.hpp"

#include <algorithm>
#include <stdexcept>

#include "prunerank/errors.hpp"
#include "prunerank/unicode.hpp"

namespace prunerank {

namespace {

void check_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("threshold must be in [0, 1], got " + std::to_string(threshold));
  }
}

// Joins kept sentence spans. Direct concatenation when the original gap
// contains no whitespace (scripts written without spaces), otherwise a
// single space.
std::string join_kept(const SegmentedPassage& passage, const std::vector<size_t>& kept) {
  const std::u32string cps = uni::decode_utf8(passage.text);
  std::string out;
  size_t prev_end = 0;
  bool first = true;
  for (size_t idx : kept) {
    const SentenceSpan& s = passage.sentences[idx];
    if (!first) {
      bool gap_has_space = false;
      for (size_t i = prev_end; i < s.start && !gap_has_space; ++i) {
        gap_has_space = uni::is_space(cps[i]);
      }
      if (gap_has_space) out += ' ';
    }
    out += uni::cp_slice(passage.text, s.start, s.end);
    prev_end = s.end;
    first = false;
  }
  return out;
}

// Fills kept/pruned_text/compression from per-sentence keep flags.
void finalize(PrunedPassage& out, const SegmentedPassage& passage, const std::vector<int>& keep,
              const std::vector<size_t>& tokens_per_sentence, CompressionBasis basis) {
  const size_t n = passage.sentences.size();
  size_t kept_units = 0, total_units = 0;
  for (size_t s = 0; s < n; ++s) {
    const size_t units = basis == CompressionBasis::characters
                             ? passage.sentences[s].end - passage.sentences[s].start
                             : tokens_per_sentence[s];
    total_units += units;
    if (keep[s]) {
      out.kept.push_back(s);
      kept_units += units;
    }
  }
  out.pruned_text = join_kept(passage, out.kept);
  if (total_units == 0) {
    // Token basis with a tokenless passage: fully pruned counts as full
    // compression, anything kept as none.
    out.compression = out.kept.empty() && n > 0 ? 1.0 : 0.0;
  } else {
    out.compression = 1.0 - static_cast<double>(kept_units) / static_cast<double>(total_units);
  }
}

}  // namespace

std::string_view to_string(CompressionBasis basis) {
  return basis == CompressionBasis::characters ? "characters" : "tokens";
}

CompressionBasis compression_basis_from_string(std::string_view name) {
  if (name == "characters") return CompressionBasis::characters;
  if (name == "tokens") return CompressionBasis::tokens;
  throw ConfigError("unknown compression basis: " + std::string(name));
}

std::vector<int> binarize(const std::vector<double>& values, double threshold) {
  check_threshold(threshold);
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(v >= threshold ? 1 : 0);
  return out;
}

std::vector<int> decide_sentences(const std::vector<int>& token_mask,
                                  const std::vector<size_t>& alignment, size_t n_sentences) {
  if (token_mask.size() != alignment.size()) {
    throw std::invalid_argument("token mask and alignment differ in length");
  }
  std::vector<size_t> total(n_sentences, 0), flagged(n_sentences, 0);
  for (size_t t = 0; t < alignment.size(); ++t) {
    const size_t s = alignment[t];
    if (s >= n_sentences) {
      throw std::invalid_argument("alignment entry out of range: " + std::to_string(s));
    }
    ++total[s];
    if (token_mask[t]) ++flagged[s];
  }
  std::vector<int> keep(n_sentences, 0);
  for (size_t s = 0; s < n_sentences; ++s) {
    keep[s] = 2 * flagged[s] > total[s] ? 1 : 0;
  }
  return keep;
}

PrunedPassage prune(std::string_view query, const SegmentedPassage& passage, Scorer& scorer,
                    const PruningOptions& options) {
  check_threshold(options.threshold);
  const ScoredPassage sp = scorer.score(query, passage);
  PrunedPassage out;
  out.passage_score = sp.passage_score;
  const size_t n = passage.sentences.size();
  if (n == 0) return out;

  const std::vector<int> mask = binarize(sp.token_values, options.threshold);
  const std::vector<size_t> alignment = align_tokens(sp.tokens, passage.sentences);
  if (alignment.size() != mask.size()) {
    throw InconsistentSpans("scorer returned " + std::to_string(mask.size()) + " values for " +
                            std::to_string(alignment.size()) + " content tokens");
  }
  std::vector<int> keep = decide_sentences(mask, alignment, n);
  if (options.always_keep_first) keep[0] = 1;

  std::vector<size_t> tokens_per_sentence(n, 0);
  for (size_t s : alignment) ++tokens_per_sentence[s];
  finalize(out, passage, keep, tokens_per_sentence, options.basis);
  return out;
}

PrunedPassage prune(std::string_view query, const SegmentedPassage& passage,
                    const ScorerConfig& config, const PruningOptions& options) {
  auto scorer = make_scorer(config);
  return prune(query, passage, *scorer, options);
}

PrunedPassage dslr_prune(std::string_view query, const SegmentedPassage& passage, Scorer& scorer,
                         double threshold, CompressionBasis basis) {
  check_threshold(threshold);
  PrunedPassage out;
  const size_t n = passage.sentences.size();
  if (n == 0) return out;

  std::vector<int> keep(n, 0);
  std::vector<size_t> tokens_per_sentence(n, 0);
  double best = 0.0;
  for (size_t s = 0; s < n; ++s) {
    const SentenceSpan& span = passage.sentences[s];
    SegmentedPassage single;
    single.text = uni::cp_slice(passage.text, span.start, span.end);
    single.sentences = {{0, span.end - span.start}};
    single.language_hint = passage.language_hint;
    const ScoredPassage sp = scorer.score(query, single);
    tokens_per_sentence[s] = sp.content_token_count();
    keep[s] = sp.passage_score > threshold ? 1 : 0;
    best = std::max(best, sp.passage_score);
  }
  out.passage_score = best;
  finalize(out, passage, keep, tokens_per_sentence, basis);
  return out;
}

double batch_compression(const std::vector<PrunedPassage>& batch) {
  if (batch.empty()) throw EmptyBatch("batch_compression over an empty batch");
  double sum = 0.0;
  for (const PrunedPassage& p : batch) sum += p.compression;
  return sum / static_cast<double>(batch.size());
}

}  // namespace prunerank
