#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prunerank/errors.hpp"
#include "prunerank/evaluator.hpp"
#include "prunerank/scorer.hpp"
#include "prunerank/synthetic.hpp"

using namespace prunerank;

namespace {

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

EvalRecord full_record() {
  EvalRecord r;
  r.query = "what is the capital of France?";
  r.language = "en";
  r.passages = {"Paris is the capital of France. Bananas are yellow.", "Unrelated text."};
  r.gold_answers = {"Paris"};
  r.gold_choice = "a";
  r.relevant_ids = std::vector<std::string>{"p0"};
  r.ranking = std::vector<std::string>{"p0", "p1"};
  return r;
}

}  // namespace

TEST_CASE("char3gram_recall counts distinct label grams found in the answer") {
  CHECK(char3gram_recall("paris", "paris") == 1.0);
  CHECK(char3gram_recall("Paris", "The capital is paris.") == 1.0);
  // Label grams abc,bcd,cde,def; only abc appears.
  CHECK(char3gram_recall("abcdef", "abc xyz") == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(char3gram_recall("paris", "berlin") == 0.0);
}

TEST_CASE("char3gram_recall normalizes case and whitespace on both sides") {
  CHECK(char3gram_recall("new  york", "NEW YORK") == 1.0);
  CHECK(char3gram_recall("ÉCOLE", "l'école est ici") == 1.0);
  CHECK(char3gram_recall("  paris  ", "paris") == 1.0);
}

TEST_CASE("labels shorter than three codepoints use substring matching") {
  CHECK(char3gram_recall("42", "the answer is 42") == 1.0);
  CHECK(char3gram_recall("42", "4 2") == 0.0);
  CHECK(char3gram_recall("你好", "他说你好了") == 1.0);
  CHECK(char3gram_recall("no", "yes") == 0.0);
}

TEST_CASE("choice_accuracy compares normalized labels") {
  CHECK(choice_accuracy("Yes", "yes") == 1);
  CHECK(choice_accuracy("  yes  ", "yes") == 1);
  CHECK(choice_accuracy("no", "yes") == 0);
  CHECK(choice_accuracy("VRAI", "vrai") == 1);
}

TEST_CASE("choice_accuracy with an option set rejects unknown predictions") {
  const std::vector<std::string> options = {"yes", "no"};
  CHECK(choice_accuracy("YES", "yes", options) == 1);
  CHECK(choice_accuracy("no", "yes", options) == 0);
  CHECK_THROWS_AS(choice_accuracy("maybe", "yes", options), UnknownLabel);
}

TEST_CASE("recall_at_k divides top-k hits by the relevant set size") {
  const std::vector<std::string> ranking = {"a", "b", "c", "d"};
  const std::vector<std::string> relevant = {"a", "c"};
  CHECK(recall_at_k(ranking, relevant, 1) == 0.5);
  CHECK(recall_at_k(ranking, relevant, 2) == 0.5);
  CHECK(recall_at_k(ranking, relevant, 3) == 1.0);
  CHECK(recall_at_k(ranking, relevant, 10) == 1.0);
  // Duplicate relevant ids collapse into a set.
  CHECK(recall_at_k(ranking, {"a", "a", "c"}, 3) == 1.0);
  CHECK_THROWS_AS(recall_at_k(ranking, relevant, 0), std::invalid_argument);
  CHECK_THROWS_AS(recall_at_k(ranking, {}, 2), EmptyRelevantSet);
}

TEST_CASE("ndcg_at_k matches hand-computed discounted gains") {
  const std::vector<std::string> ranking = {"a", "b", "c", "d"};
  const std::vector<std::string> relevant = {"a", "c"};
  // dcg = 1/log2(2) + 1/log2(4) = 1.5, idcg = 1 + 1/log2(3).
  CHECK(ndcg_at_k(ranking, relevant, 4) ==
        doctest::Approx(0.9197207891481876).epsilon(1e-15));
  CHECK(ndcg_at_k({"a", "c", "b", "d"}, relevant, 4) == 1.0);
  CHECK(ndcg_at_k({"b", "d"}, {"a"}, 2) == 0.0);
  CHECK(ndcg_at_k(ranking, {}, 4) == 0.0);
  // The ideal gain is truncated at k as well.
  CHECK(ndcg_at_k({"a"}, relevant, 1) == 1.0);
  CHECK_THROWS_AS(ndcg_at_k(ranking, relevant, 0), std::invalid_argument);
}

TEST_CASE("extractive stub echoes the sentences most similar to the query") {
  const std::string context = "Paris is the capital of France. Bananas are yellow and long.";
  CHECK(extractive_answer_stub("capital of france", context) ==
        "Paris is the capital of France.");
  CHECK(extractive_answer_stub("zzzqqq", "Nothing here. At all.") == "");
  CHECK(extractive_answer_stub("anything", "") == "");
  // Ties keep every best sentence, joined with a single space.
  CHECK(extractive_answer_stub("the cat", "The cat sat. The cat ran.") ==
        "The cat sat. The cat ran.");
}

TEST_CASE("sweep aggregates per language with an ALL macro average") {
  const auto records = make_bilingual_qa_set(10, 7);
  LexicalScorer scorer;
  const std::vector<double> thresholds = {0.0, 0.6};
  const auto rows = sweep(records, thresholds, scorer);

  REQUIRE(rows.size() == 6);
  const std::vector<std::string> langs = {"en", "fr", "ALL"};
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].threshold == thresholds[i / 3]);
    CHECK(rows[i].language == langs[i % 3]);
    CHECK(rows[i].mean_compression >= 0.0);
    CHECK(rows[i].mean_compression <= 1.0);
    CHECK(rows[i].mean_metric >= 0.0);
    CHECK(rows[i].mean_metric <= 1.0);
  }
  CHECK(rows[0].n_examples == 5);
  CHECK(rows[1].n_examples == 5);
  CHECK(rows[2].n_examples == 10);

  // A zero threshold keeps everything.
  CHECK(rows[0].mean_compression == 0.0);
  CHECK(rows[1].mean_compression == 0.0);
  CHECK(rows[2].mean_compression == 0.0);

  // ALL rows average the per-language means.
  CHECK(rows[2].mean_metric ==
        doctest::Approx((rows[0].mean_metric + rows[1].mean_metric) / 2.0).epsilon(1e-12));
  CHECK(rows[5].mean_compression ==
        doctest::Approx((rows[3].mean_compression + rows[4].mean_compression) / 2.0)
            .epsilon(1e-12));
}

TEST_CASE("sweep is deterministic") {
  const auto records = make_bilingual_qa_set(6, 3);
  LexicalScorer scorer;
  const std::vector<double> thresholds = {0.3, 0.7};
  const auto a = sweep(records, thresholds, scorer);
  const auto b = sweep(records, thresholds, scorer);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].threshold == b[i].threshold);
    CHECK(a[i].language == b[i].language);
    CHECK(a[i].n_examples == b[i].n_examples);
    CHECK(a[i].mean_compression == b[i].mean_compression);
    CHECK(a[i].mean_metric == b[i].mean_metric);
  }
}

TEST_CASE("sweep supports the sentence-wise baseline pruner") {
  const auto records = make_bilingual_qa_set(4, 11);
  LexicalScorer scorer;
  SweepOptions options;
  options.kind = PrunerKind::dslr;
  const auto rows = sweep(records, {0.5}, scorer, options);
  REQUIRE(rows.size() == 3);
  CHECK(rows.back().language == "ALL");
  CHECK(rows.back().n_examples == 4);
}

TEST_CASE("sweep can score choice tasks with a custom generator") {
  EvalRecord r;
  r.query = "is the sky blue?";
  r.language = "en";
  r.passages = {"The sky is blue. Grass is green."};
  r.gold_choice = "Yes";

  LexicalScorer scorer;
  SweepOptions options;
  options.metric = EvalMetric::choice;
  options.generator = [](std::string_view, std::string_view) { return std::string("yes"); };
  const auto rows = sweep({r}, {0.0}, scorer, options);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].language == "en");
  CHECK(rows[0].mean_metric == 1.0);
  CHECK(rows[1].language == "ALL");
}

TEST_CASE("sweep skips records without the gold field for the metric") {
  EvalRecord no_gold;
  no_gold.query = "q";
  no_gold.language = "en";
  no_gold.passages = {"Some text."};
  LexicalScorer scorer;
  CHECK(sweep({no_gold}, {0.5}, scorer).empty());

  // A choice-only record is invisible to the text metric.
  EvalRecord choice_only = no_gold;
  choice_only.gold_choice = "yes";
  CHECK(sweep({choice_only}, {0.5}, scorer).empty());
}

TEST_CASE("sweep validates thresholds and options") {
  LexicalScorer scorer;
  const std::vector<EvalRecord> records = {full_record()};
  CHECK_THROWS_AS(sweep(records, {}, scorer), std::invalid_argument);
  CHECK_THROWS_AS(sweep(records, {1.5}, scorer), std::invalid_argument);
  CHECK_THROWS_AS(sweep(records, {-0.1}, scorer), std::invalid_argument);
  SweepOptions options;
  options.top_k_passages = 0;
  CHECK_THROWS_AS(sweep(records, {0.5}, scorer, options), std::invalid_argument);
}

TEST_CASE("eval records round trip through JSON byte-identically") {
  const EvalRecord record = full_record();
  const std::string once = eval_record_to_json(record);
  const EvalRecord parsed = eval_record_from_json(once);
  CHECK(parsed == record);
  CHECK(eval_record_to_json(parsed) == once);

  EvalRecord minimal;
  minimal.query = "q";
  minimal.language = "fr";
  minimal.passages = {"Un texte."};
  minimal.gold_answers = {"texte"};
  const std::string line = eval_record_to_json(minimal);
  CHECK(eval_record_from_json(line) == minimal);
  CHECK(eval_record_to_json(eval_record_from_json(line)) == line);
}

TEST_CASE("eval_record_from_json reports the offending line") {
  CHECK_THROWS_AS(eval_record_from_json("not json", 7), ParseError);
  try {
    eval_record_from_json("not json", 7);
  } catch (const ParseError& e) {
    CHECK(e.line == 7);
    CHECK(std::string(e.what()).find("line 7:") != std::string::npos);
  }

  // Missing required keys.
  CHECK_THROWS_AS(eval_record_from_json(R"({"language":"en","passages":[]})"), ParseError);
  // No gold field at all.
  CHECK_THROWS_AS(
      eval_record_from_json(R"({"query":"q","language":"en","passages":["p"]})"), ParseError);
  // Wrong field type.
  CHECK_THROWS_AS(
      eval_record_from_json(
          R"({"query":"q","language":"en","passages":"p","gold_answers":["a"]})"),
      ParseError);
}

TEST_CASE("eval dataset files round trip byte-identically") {
  const std::vector<EvalRecord> records = make_bilingual_qa_set(5, 13);
  const std::string path_a = "eval_ds_a.jsonl";
  const std::string path_b = "eval_ds_b.jsonl";
  write_eval_dataset(path_a, records);
  const std::vector<EvalRecord> loaded = load_eval_dataset(path_a);
  CHECK(loaded == records);
  write_eval_dataset(path_b, loaded);
  CHECK(file_bytes(path_a) == file_bytes(path_b));
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());

  CHECK_THROWS_AS(load_eval_dataset("no_such_dataset.jsonl"), Error);
}

TEST_CASE("format_double emits the shortest exact decimal form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_double(0.0) == "0.0");
  CHECK(format_double(1.0) == "1.0");

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double x = dist(rng);
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("report CSV files round trip byte-identically") {
  std::vector<ParetoPoint> rows;
  ParetoPoint p;
  p.threshold = 0.1;
  p.language = "en";
  p.n_examples = 50;
  p.mean_compression = 1.0 / 3.0;
  p.mean_metric = 0.9197207891481876;
  rows.push_back(p);
  p.threshold = 1.0;
  p.language = "ALL";
  p.n_examples = 100;
  p.mean_compression = 1.0;
  p.mean_metric = 0.0;
  rows.push_back(p);

  const std::string path_a = "report_a.csv";
  const std::string path_b = "report_b.csv";
  write_report_csv(rows, path_a);

  std::ifstream in(path_a);
  std::string header;
  std::getline(in, header);
  CHECK(header == "threshold,language,n,compression,metric");
  in.close();

  const auto loaded = read_report_csv(path_a);
  REQUIRE(loaded.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(loaded[i].threshold == rows[i].threshold);
    CHECK(loaded[i].language == rows[i].language);
    CHECK(loaded[i].n_examples == rows[i].n_examples);
    CHECK(loaded[i].mean_compression == rows[i].mean_compression);
    CHECK(loaded[i].mean_metric == rows[i].mean_metric);
  }
  write_report_csv(loaded, path_b);
  CHECK(file_bytes(path_a) == file_bytes(path_b));
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
}

TEST_CASE("read_report_csv rejects malformed input") {
  const std::string path = "report_bad.csv";
  auto write_file = [&path](const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
  };

  write_file("wrong,header\n");
  CHECK_THROWS_AS(read_report_csv(path), ParseError);
  try {
    read_report_csv(path);
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
  }

  write_file("threshold,language,n,compression,metric\n0.5,en,10\n");
  CHECK_THROWS_AS(read_report_csv(path), ParseError);

  write_file("threshold,language,n,compression,metric\nnope,en,10,0.5,0.5\n");
  CHECK_THROWS_AS(read_report_csv(path), ParseError);

  std::remove(path.c_str());
  CHECK_THROWS_AS(read_report_csv("no_such_report.csv"), Error);
}

TEST_CASE("report JSONL files round trip byte-identically") {
  std::vector<ParetoPoint> rows;
  ParetoPoint p;
  p.threshold = 0.25;
  p.language = "fr";
  p.n_examples = 7;
  p.mean_compression = 0.125;
  p.mean_metric = 2.0 / 3.0;
  rows.push_back(p);

  const std::string path_a = "report_a.jsonl";
  const std::string path_b = "report_b.jsonl";
  write_report_jsonl(rows, path_a);
  const auto loaded = read_report_jsonl(path_a);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].threshold == rows[0].threshold);
  CHECK(loaded[0].language == rows[0].language);
  CHECK(loaded[0].n_examples == rows[0].n_examples);
  CHECK(loaded[0].mean_compression == rows[0].mean_compression);
  CHECK(loaded[0].mean_metric == rows[0].mean_metric);
  write_report_jsonl(loaded, path_b);
  CHECK(file_bytes(path_a) == file_bytes(path_b));
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());

  const std::string bad = "report_bad.jsonl";
  std::ofstream out(bad, std::ios::binary);
  out << "{\"threshold\":0.5}\n";
  out.close();
  CHECK_THROWS_AS(read_report_jsonl(bad), ParseError);
  std::remove(bad.c_str());
}
