#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "prunerank/errors.hpp"
#include "prunerank/scorer.hpp"
#include "prunerank/unicode.hpp"

using namespace prunerank;

namespace {

std::vector<TokenSpan> toks(std::initializer_list<std::pair<size_t, size_t>> pairs) {
  std::vector<TokenSpan> out;
  for (auto [s, e] : pairs) out.push_back({s, e, false});
  return out;
}

}  // namespace

TEST_CASE("tokenize_for_scoring splits words and separators") {
  CHECK(tokenize_for_scoring("Hello, world.") == toks({{0, 5}, {5, 6}, {7, 12}, {12, 13}}));
  CHECK(tokenize_for_scoring("") == toks({}));
  CHECK(tokenize_for_scoring("   ") == toks({}));
  CHECK(tokenize_for_scoring("one two") == toks({{0, 3}, {4, 7}}));
  // A CJK run is a single token; the ideographic stop separates.
  CHECK(tokenize_for_scoring("\xe4\xbd\xa0\xe5\xa5\xbd\xe3\x80\x82") == toks({{0, 2}, {2, 3}}));
  // Consecutive separators each stand alone.
  CHECK(tokenize_for_scoring("a?!b") == toks({{0, 1}, {1, 2}, {2, 3}, {3, 4}}));
  // Offsets are codepoints: é is one.
  CHECK(tokenize_for_scoring("caf\xc3\xa9 au") == toks({{0, 4}, {5, 7}}));
}

TEST_CASE("tokenize_for_scoring never emits special tokens") {
  for (const TokenSpan& t : tokenize_for_scoring("Mixed, text! with; stops:")) {
    CHECK_FALSE(t.is_special);
  }
}

TEST_CASE("lexical_token_value matches hand-computed overlaps") {
  // All three grams of "capital" occur in the query.
  CHECK(lexical_token_value("capital", "capital of france") == doctest::Approx(0.98).epsilon(1e-12));
  // No overlap at all.
  CHECK(lexical_token_value("xyzzy", "paris") == doctest::Approx(0.02).epsilon(1e-12));
  // Below three codepoints the whole token is the gram.
  CHECK(lexical_token_value("pa", "pa") == doctest::Approx(0.98).epsilon(1e-12));
  // "paris" has grams par/ari/ris; only "par" appears in "the par".
  CHECK(lexical_token_value("paris", "the par") == doctest::Approx(0.02 + 0.96 / 3.0).epsilon(1e-12));
  // Case folds before matching.
  CHECK(lexical_token_value("PARIS", "paris") == doctest::Approx(0.98).epsilon(1e-12));
}

TEST_CASE("lexical_token_value rejects tokens that fold to nothing") {
  CHECK_THROWS_AS(lexical_token_value("", "query"), std::invalid_argument);
  CHECK_THROWS_AS(lexical_token_value("   ", "query"), std::invalid_argument);
}

TEST_CASE("lexical_passage_score averages token values") {
  CHECK(lexical_passage_score({0.02, 0.98}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lexical_passage_score({0.5}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lexical_passage_score({0.02, 0.02, 0.98, 0.98}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(lexical_passage_score({}), EmptyPassage);
}

TEST_CASE("lexical scorer matches a hand-scored passage") {
  LexicalScorer scorer;
  const ScoredPassage sp = scorer.score("paris capital", segment("Paris is the capital."));
  // Tokens: Paris / is / the / capital / "." with values 0.98, 0.02, 0.02,
  // 0.98, 0.02; mean 0.404.
  REQUIRE(sp.tokens.size() == 5);
  REQUIRE(sp.token_values.size() == 5);
  CHECK(sp.token_values[0] == doctest::Approx(0.98).epsilon(1e-12));
  CHECK(sp.token_values[3] == doctest::Approx(0.98).epsilon(1e-12));
  CHECK(sp.passage_score == doctest::Approx(0.404).epsilon(1e-12));
  CHECK(sp.content_token_count() == 5);
}

TEST_CASE("lexical scorer requires a query and tolerates empty passages") {
  LexicalScorer scorer;
  CHECK_THROWS_AS(scorer.score("", segment("Some text.")), std::invalid_argument);
  const ScoredPassage sp = scorer.score("query", segment(""));
  CHECK(sp.tokens.empty());
  CHECK(sp.token_values.empty());
  CHECK(sp.passage_score == 0.0);
}

TEST_CASE("lexical values stay strictly inside the unit interval") {
  std::mt19937_64 rng(99);
  const std::u32string alphabet = U"abcdefg 你好.é!";
  LexicalScorer scorer;
  for (int iter = 0; iter < 200; ++iter) {
    std::u32string q32, t32;
    for (size_t i = 0; i < 1 + rng() % 12; ++i) q32.push_back(alphabet[rng() % alphabet.size()]);
    for (size_t i = 0; i < rng() % 40; ++i) t32.push_back(alphabet[rng() % alphabet.size()]);
    const std::string query = uni::encode_utf8(q32);
    if (query.find_first_not_of(" \t") == std::string::npos) continue;
    const ScoredPassage sp = scorer.score(query, segment(uni::encode_utf8(t32)));
    for (double v : sp.token_values) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
    CHECK(sp.token_values.size() == sp.content_token_count());
  }
}

TEST_CASE("adding a token gram to the query never lowers the value") {
  std::mt19937_64 rng(123);
  const std::string letters = "abcdefghij";
  for (int iter = 0; iter < 200; ++iter) {
    std::string token;
    for (size_t i = 0; i < 3 + rng() % 8; ++i) token += letters[rng() % letters.size()];
    std::string query;
    for (size_t i = 0; i < 3 + rng() % 10; ++i) query += letters[rng() % letters.size()];

    const double before = lexical_token_value(token, query);
    const size_t offset = rng() % (token.size() - 2);
    const std::string richer = query + " " + token.substr(offset, 3);
    const double after = lexical_token_value(token, richer);
    CHECK(after >= before - 1e-12);
  }
}

TEST_CASE("scoring is deterministic") {
  LexicalScorer scorer;
  const SegmentedPassage seg = segment("Paris is the capital of France. It is large.");
  const ScoredPassage a = scorer.score("capital of france", seg);
  const ScoredPassage b = scorer.score("capital of france", seg);
  CHECK(a.passage_score == b.passage_score);
  CHECK(a.token_values == b.token_values);
  CHECK(a.tokens == b.tokens);
}

TEST_CASE("score_batch returns one result per passage") {
  LexicalScorer scorer;
  const std::vector<SegmentedPassage> batch = {segment("One."), segment("Two two."), segment("")};
  const auto results = scorer.score_batch("one two", batch);
  REQUIRE(results.size() == 3);
  CHECK(results[0].tokens.size() == 2);
  CHECK(results[2].tokens.empty());
}

TEST_CASE("backend names round trip") {
  CHECK(scorer_backend_from_string("lexical") == ScorerBackend::lexical);
  CHECK(scorer_backend_from_string("remote") == ScorerBackend::remote);
  CHECK(scorer_backend_from_string("toy-model") == ScorerBackend::toy_model);
  CHECK(scorer_backend_from_string("toy_model") == ScorerBackend::toy_model);
  CHECK_THROWS_AS(scorer_backend_from_string("bert"), ConfigError);
  CHECK(to_string(ScorerBackend::lexical) == "lexical");
  CHECK(to_string(ScorerBackend::remote) == "remote");
  CHECK(to_string(ScorerBackend::toy_model) == "toy-model");
}

TEST_CASE("make_scorer validates backend requirements") {
  ScorerConfig config;
  config.backend = ScorerBackend::remote;
  CHECK_THROWS_AS(make_scorer(config), ConfigError);
  config.backend = ScorerBackend::toy_model;
  CHECK_THROWS_AS(make_scorer(config), ConfigError);
  config.backend = ScorerBackend::lexical;
  CHECK(make_scorer(config)->info() == "lexical");
}
