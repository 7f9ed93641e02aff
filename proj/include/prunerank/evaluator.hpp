#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prunerank/pruner.hpp"
#include "prunerank/scorer.hpp"
#include "prunerank/segmenter.hpp"

namespace prunerank {

// One QA evaluation record. Exactly which optional fields are present
// depends on the task: answer strings for generation, a choice label for
// classification, id lists for ranking.
struct EvalRecord {
  std::string query;
  std::string language;
  std::vector<std::string> passages;
  std::vector<std::string> gold_answers;              // empty means absent
  std::optional<std::string> gold_choice;
  std::optional<std::vector<std::string>> relevant_ids;
  std::optional<std::vector<std::string>> ranking;
  bool operator==(const EvalRecord&) const = default;
};

// Fraction of the label's distinct character 3-grams found in the answer,
// after casefolding, whitespace collapsing and trimming both sides. Labels
// shorter than 3 codepoints fall back to exact substring match.
double char3gram_recall(std::string_view label, std::string_view answer);

// 1 when the normalized prediction equals the normalized gold label.
int choice_accuracy(std::string_view predicted, std::string_view gold);
// Same, but a prediction outside the option set raises UnknownLabel.
int choice_accuracy(std::string_view predicted, std::string_view gold,
                    const std::vector<std::string>& option_set);

// |top-k of ranking ∩ relevant| / |relevant|. Throws EmptyRelevantSet.
double recall_at_k(const std::vector<std::string>& ranking,
                   const std::vector<std::string>& relevant, int k);

// Binary-gain nDCG@k; an empty relevant set scores 0.
double ndcg_at_k(const std::vector<std::string>& ranking,
                 const std::vector<std::string>& relevant, int k);

struct ParetoPoint {
  double threshold = 0.0;
  std::string language;  // per-language tag or "ALL"
  size_t n_examples = 0;
  double mean_compression = 0.0;
  double mean_metric = 0.0;
};

enum class PrunerKind { engine, dslr };
enum class EvalMetric { char3gram, choice };

// Answer generator given a query and (pruned) context.
using Generator = std::function<std::string(std::string_view, std::string_view)>;

// Deterministic generator stand-in: echoes the context sentences sharing
// the most character 3-grams with the query.
std::string extractive_answer_stub(std::string_view query, std::string_view context);

struct SweepOptions {
  PrunerKind kind = PrunerKind::engine;
  EvalMetric metric = EvalMetric::char3gram;
  int top_k_passages = 5;
  bool always_keep_first = false;
  CompressionBasis basis = CompressionBasis::characters;
  Generator generator;  // empty uses the extractive stub
  const SegmenterRules* rules = nullptr;
};

// Prunes the top passages of every record at each threshold, generates an
// answer from the surviving text, and aggregates compression and quality per
// language plus an "ALL" macro average. Rows come out grouped by threshold
// in input order, languages sorted, ALL last.
std::vector<ParetoPoint> sweep(const std::vector<EvalRecord>& records,
                               const std::vector<double>& thresholds, Scorer& scorer,
                               const SweepOptions& options = {});

std::string eval_record_to_json(const EvalRecord& record);
EvalRecord eval_record_from_json(std::string_view line, size_t line_no = 1);

std::vector<EvalRecord> load_eval_dataset(const std::string& path);
void write_eval_dataset(const std::string& path, const std::vector<EvalRecord>& records);

// Report files: CSV with a fixed header, and JSONL with one row object per
// line. Both round-trip byte-identically.
void write_report_csv(const std::vector<ParetoPoint>& rows, const std::string& path);
std::vector<ParetoPoint> read_report_csv(const std::string& path);
void write_report_jsonl(const std::vector<ParetoPoint>& rows, const std::string& path);
std::vector<ParetoPoint> read_report_jsonl(const std::string& path);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace prunerank
