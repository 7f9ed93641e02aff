#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "prunerank/errors.hpp"
#include "prunerank/pruner.hpp"
#include "prunerank/unicode.hpp"

using namespace prunerank;

namespace {

// Scorer with scripted per-token values, for exercising the pruning rule
// without lexical coupling. Values repeat if a passage has more tokens.
class StubScorer final : public Scorer {
 public:
  explicit StubScorer(std::vector<double> values) : values_(std::move(values)) {}

  ScoredPassage score(std::string_view, const SegmentedPassage& passage) override {
    ++calls;
    ScoredPassage out;
    out.tokens = tokenize_for_scoring(passage.text);
    for (size_t i = 0; i < out.tokens.size(); ++i) {
      out.token_values.push_back(values_[i % values_.size()]);
    }
    if (!out.token_values.empty()) {
      out.passage_score = lexical_passage_score(out.token_values);
    }
    return out;
  }

  std::string info() const override { return "stub"; }

  int calls = 0;

 private:
  std::vector<double> values_;
};

}  // namespace

TEST_CASE("binarize keeps values at or above the threshold") {
  CHECK(binarize({0.2, 0.5, 0.8}, 0.5) == std::vector<int>{0, 1, 1});
  CHECK(binarize({0.2, 0.5, 0.8}, 0.0) == std::vector<int>{1, 1, 1});
  CHECK(binarize({0.2, 0.5, 0.8}, 1.0) == std::vector<int>{0, 0, 0});
  CHECK(binarize({}, 0.5).empty());
  CHECK_THROWS_AS(binarize({0.5}, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(binarize({0.5}, 1.1), std::invalid_argument);
}

TEST_CASE("decide_sentences requires a strict majority") {
  // Sentence 0 has tokens 0-2 (two flagged of three), sentence 1 tokens 3-4
  // (one of two). A tie is not a majority.
  CHECK(decide_sentences({1, 1, 0, 1, 0}, {0, 0, 0, 1, 1}, 2) == std::vector<int>{1, 0});
  // Tokenless sentences are dropped.
  CHECK(decide_sentences({1}, {0}, 2) == std::vector<int>{1, 0});
  CHECK(decide_sentences({}, {}, 0).empty());
  CHECK_THROWS_AS(decide_sentences({1, 0}, {0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(decide_sentences({1}, {5}, 2), std::invalid_argument);
}

TEST_CASE("prune keeps the majority-flagged sentence") {
  LexicalScorer scorer;
  const SegmentedPassage seg = segment("Paris is the capital. The sky is blue.");
  PruningOptions options;
  options.threshold = 0.5;
  const PrunedPassage out = prune("paris is the capital of france", seg, scorer, options);
  // First sentence: 4 of 5 tokens match query grams. Second: none of 5.
  CHECK(out.kept == std::vector<size_t>{0});
  CHECK(out.pruned_text == "Paris is the capital.");
  // Characters basis: 16 of 37 in-sentence codepoints removed.
  CHECK(out.compression == doctest::Approx(16.0 / 37.0).epsilon(1e-12));
  CHECK(out.passage_score == doctest::Approx(0.404).epsilon(1e-9));
}

TEST_CASE("token basis counts tokens instead of characters") {
  LexicalScorer scorer;
  const SegmentedPassage seg = segment("Paris is the capital. The sky is blue.");
  PruningOptions options;
  options.basis = CompressionBasis::tokens;
  const PrunedPassage out = prune("paris is the capital of france", seg, scorer, options);
  // Each sentence carries five tokens (four words and the stop).
  CHECK(out.kept == std::vector<size_t>{0});
  CHECK(out.compression == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("threshold zero keeps everything and one prunes everything") {
  LexicalScorer scorer;
  const char* passages[] = {
      "Paris is the capital. The sky is blue.",
      "One. Two! Three?",
      "\xe4\xbd\xa0\xe5\xa5\xbd\xe3\x80\x82\xe4\xb8\x96\xe7\x95\x8c\xef\xbc\x81",
      "No stops at all",
  };
  for (const char* text : passages) {
    const SegmentedPassage seg = segment(text);
    PruningOptions keep_all;
    keep_all.threshold = 0.0;
    const PrunedPassage all = prune("some query", seg, scorer, keep_all);
    CHECK(all.compression == 0.0);
    CHECK(all.kept.size() == seg.sentences.size());

    PruningOptions drop_all;
    drop_all.threshold = 1.0;
    const PrunedPassage none = prune("some query", seg, scorer, drop_all);
    CHECK(none.compression == 1.0);
    CHECK(none.kept.empty());
    CHECK(none.pruned_text.empty());
  }
}

TEST_CASE("empty passage prunes to nothing at zero compression") {
  LexicalScorer scorer;
  const PrunedPassage out = prune("query", segment(""), scorer, {});
  CHECK(out.kept.empty());
  CHECK(out.pruned_text.empty());
  CHECK(out.compression == 0.0);
  CHECK(out.passage_score == 0.0);
}

TEST_CASE("always_keep_first overrides the vote for the opening sentence") {
  LexicalScorer scorer;
  const SegmentedPassage seg = segment("The sky is blue. Paris is the capital.");
  PruningOptions options;
  options.always_keep_first = true;
  const PrunedPassage out = prune("paris is the capital of france", seg, scorer, options);
  CHECK(out.kept == std::vector<size_t>{0, 1});
  CHECK(out.compression == 0.0);
}

TEST_CASE("prune calls the scorer exactly once per passage") {
  StubScorer scorer({0.9, 0.1});
  const SegmentedPassage seg = segment("One two three. Four five six. Seven eight.");
  prune("q", seg, scorer, {});
  CHECK(scorer.calls == 1);
}

TEST_CASE("dslr_prune scores each sentence separately") {
  StubScorer scorer({0.9});
  const SegmentedPassage seg = segment("One two three. Four five six. Seven eight.");
  dslr_prune("q", seg, scorer, 0.5);
  CHECK(scorer.calls == 3);
}

TEST_CASE("dslr keeps sentences scoring strictly above the threshold") {
  LexicalScorer scorer;
  const SegmentedPassage seg = segment("capital capital capital. xyzzy xyzzy.");
  const PrunedPassage out = dslr_prune("capital", seg, scorer, 0.5);
  // Sentence scores: (3*0.98 + 0.02)/4 = 0.74 and (2*0.02 + 0.02)/3 = 0.02.
  CHECK(out.kept == std::vector<size_t>{0});
  CHECK(out.pruned_text == "capital capital capital.");
  CHECK(out.passage_score == doctest::Approx(0.74).epsilon(1e-12));

  // The comparison is strict: a sentence at exactly the threshold is dropped.
  StubScorer halves({0.5});
  const PrunedPassage at = dslr_prune("q", segment("One two. Three four."), halves, 0.5);
  CHECK(at.kept.empty());
}

TEST_CASE("kept sentences join with a single space across gaps") {
  StubScorer scorer({0.9});
  // Two spaces between sentences collapse to one in the pruned text.
  const SegmentedPassage seg = segment("One two.  Three four.");
  const PrunedPassage out = prune("q", seg, scorer, {});
  CHECK(out.kept == std::vector<size_t>{0, 1});
  CHECK(out.pruned_text == "One two. Three four.");
}

TEST_CASE("adjacent cjk sentences join without inserting a space") {
  StubScorer scorer({0.9});
  // 你好。世界！ has no whitespace between the sentences.
  const SegmentedPassage seg =
      segment("\xe4\xbd\xa0\xe5\xa5\xbd\xe3\x80\x82\xe4\xb8\x96\xe7\x95\x8c\xef\xbc\x81");
  const PrunedPassage out = prune("q", seg, scorer, {});
  CHECK(out.kept == std::vector<size_t>{0, 1});
  CHECK(out.pruned_text == "\xe4\xbd\xa0\xe5\xa5\xbd\xe3\x80\x82\xe4\xb8\x96\xe7\x95\x8c\xef\xbc\x81");
}

TEST_CASE("cjk sentence votes follow scripted token values") {
  // Tokens per sentence: [你好, 。] and [世界, ！]. First sentence majority
  // flagged, second not.
  StubScorer scorer({0.9, 0.8, 0.1, 0.2});
  const SegmentedPassage seg =
      segment("\xe4\xbd\xa0\xe5\xa5\xbd\xe3\x80\x82\xe4\xb8\x96\xe7\x95\x8c\xef\xbc\x81");
  const PrunedPassage out = prune("q", seg, scorer, {});
  CHECK(out.kept == std::vector<size_t>{0});
  CHECK(out.pruned_text == "\xe4\xbd\xa0\xe5\xa5\xbd\xe3\x80\x82");
}

TEST_CASE("raising the threshold never brings a sentence back") {
  std::mt19937_64 rng(4242);
  const char* words[] = {"alpha", "beta", "gamma", "delta", "paris", "capital", "france"};
  for (int iter = 0; iter < 50; ++iter) {
    std::string text;
    const size_t n_sentences = 1 + rng() % 5;
    for (size_t s = 0; s < n_sentences; ++s) {
      if (s > 0) text += ' ';
      const size_t n_words = 1 + rng() % 6;
      for (size_t w = 0; w < n_words; ++w) {
        if (w > 0) text += ' ';
        text += words[rng() % 7];
      }
      text += '.';
    }
    LexicalScorer scorer;
    const SegmentedPassage seg = segment(text);
    std::vector<size_t> previous;
    bool first = true;
    for (double threshold : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      PruningOptions options;
      options.threshold = threshold;
      const PrunedPassage out = prune("paris capital of france", seg, scorer, options);
      if (!first) {
        // Every index kept now was also kept at the lower threshold.
        for (size_t idx : out.kept) {
          CHECK(std::find(previous.begin(), previous.end(), idx) != previous.end());
        }
      }
      previous = out.kept;
      first = false;
    }
  }
}

TEST_CASE("batch_compression averages and rejects empty batches") {
  PrunedPassage a, b;
  a.compression = 0.25;
  b.compression = 0.75;
  CHECK(batch_compression({a, b}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(batch_compression({}), EmptyBatch);
}

TEST_CASE("compression basis names round trip") {
  CHECK(compression_basis_from_string("characters") == CompressionBasis::characters);
  CHECK(compression_basis_from_string("tokens") == CompressionBasis::tokens);
  CHECK_THROWS_AS(compression_basis_from_string("bytes"), ConfigError);
  CHECK(to_string(CompressionBasis::characters) == "characters");
  CHECK(to_string(CompressionBasis::tokens) == "tokens");
}
