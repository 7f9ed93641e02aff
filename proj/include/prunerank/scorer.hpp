#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "prunerank/segmenter.hpp"

namespace prunerank {

enum class ScorerBackend { lexical, remote, toy_model };

std::string_view to_string(ScorerBackend backend);
ScorerBackend scorer_backend_from_string(std::string_view name);

struct ScorerConfig {
  ScorerBackend backend = ScorerBackend::lexical;
  std::string endpoint;    // required for remote
  std::string model_path;  // required for toy_model
  int batch_size = 8;
  int timeout_ms = 10000;
};

// Per-token relevance values for one passage against one query. Values are
// strictly inside (0, 1); token_values has one entry per content token.
struct ScoredPassage {
  double passage_score = 0.0;
  std::vector<TokenSpan> tokens;
  std::vector<double> token_values;

  size_t content_token_count() const;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual ScoredPassage score(std::string_view query, const SegmentedPassage& passage) = 0;
  virtual std::vector<ScoredPassage> score_batch(std::string_view query,
                                                 const std::vector<SegmentedPassage>& passages);
  // Short human-readable backend description for service responses.
  virtual std::string info() const = 0;
};

// Splits text into scoring tokens: maximal runs without whitespace or
// separator punctuation, plus each separator as its own single-codepoint
// token. Offsets are codepoints into text; never emits special tokens.
std::vector<TokenSpan> tokenize_for_scoring(std::string_view text);

// Reference relevance of one token against a query, from character 3-gram
// overlap, linearly mapped into [0.02, 0.98].
double lexical_token_value(std::string_view token_text, std::string_view query);

// Mean of per-token values. Throws EmptyPassage when values is empty.
double lexical_passage_score(const std::vector<double>& token_values);

// Deterministic overlap-based scorer; needs no model and no network.
class LexicalScorer final : public Scorer {
 public:
  ScoredPassage score(std::string_view query, const SegmentedPassage& passage) override;
  std::string info() const override { return "lexical"; }
};

// Client for a scoring endpoint speaking POST /v1/score. Each call opens its
// own connection, so one instance can be shared across threads.
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(std::string endpoint, int timeout_ms = 10000, int batch_size = 8);
  ScoredPassage score(std::string_view query, const SegmentedPassage& passage) override;
  std::vector<ScoredPassage> score_batch(std::string_view query,
                                         const std::vector<SegmentedPassage>& passages) override;
  std::string info() const override { return "remote " + endpoint_; }

 private:
  std::vector<ScoredPassage> post_batch(std::string_view query,
                                        const std::vector<const SegmentedPassage*>& passages);

  std::string endpoint_;
  int timeout_ms_;
  int batch_size_;
};

// Builds the backend named by the config. Remote needs an endpoint and
// toy_model a model path; a missing requirement raises ConfigError.
std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config);

// One-shot convenience around make_scorer.
ScoredPassage score(std::string_view query, const SegmentedPassage& passage,
                    const ScorerConfig& config);

}  // namespace prunerank
