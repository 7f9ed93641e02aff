#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prunerank/clients.hpp"
#include "prunerank/scorer.hpp"
#include "prunerank/segmenter.hpp"

namespace prunerank {

enum class ExampleSource { annotated, translated, english_original };

std::string_view to_string(ExampleSource source);
ExampleSource example_source_from_string(std::string_view name);

// One supervised example: binary keep/drop label per sentence plus a scalar
// teacher score for the whole passage.
struct TrainingExample {
  std::string query;
  std::string language;
  std::vector<std::string> sentences;
  std::vector<int> sentence_labels;  // same length as sentences, values 0/1
  double teacher_score = 0.0;        // in [0, 1]
  ExampleSource source = ExampleSource::english_original;
  bool operator==(const TrainingExample&) const = default;
};

struct CitationWarning {
  enum class Kind { out_of_range, malformed, zero_citations };
  Kind kind;
  std::string detail;
};

struct CitationParse {
  std::vector<int> labels;  // one flag per sentence
  std::vector<CitationWarning> warnings;
};

// Extracts bracketed 1-based sentence citations like [2] from a generated
// answer. Out-of-range or non-numeric markers are reported, not applied;
// an answer without a single valid citation yields all-zero labels plus a
// zero_citations note.
CitationParse parse_citations(std::string_view answer, size_t n_sentences);

// Expands sentence labels to per-token targets through an alignment. Throws
// IndexMismatch when the alignment points past the label list.
std::vector<int> make_token_targets(const std::vector<int>& sentence_labels,
                                    const std::vector<size_t>& alignment);

struct AnnotateOptions {
  std::string language = "en";     // answer language for the prompt
  std::string prompt_template;     // empty uses the built-in template
  size_t max_prompt_chars = 8000;  // codepoints
  int max_tokens = 256;
};

struct AnnotatedExample {
  TrainingExample example;
  std::vector<CitationWarning> warnings;
};

// Builds one training example: prompts the generator to answer the query
// from the numbered sentences, parses its citations into labels, and takes
// the teacher score from the given scorer.
AnnotatedExample annotate(std::string_view query, const SegmentedPassage& passage, LlmClient& llm,
                          Scorer& teacher, const AnnotateOptions& options = {});

// Carries an example into another language. Labels transfer positionally;
// the teacher score is copied unless rescore_with re-scores the translated
// passage.
TrainingExample translate_example(const TrainingExample& example, TranslatorClient& translator,
                                  std::string_view target_language, Scorer* rescore_with = nullptr);

struct QueryPassagePair {
  std::string query;
  std::string passage;
  std::string language = "en";
};

struct AnnotationReport {
  size_t n_examples = 0;
  size_t n_zero_label = 0;
  size_t n_malformed_citations = 0;
  size_t n_out_of_range = 0;
  size_t n_skipped = 0;
};

struct DatasetOptions {
  size_t sample_limit = 125000;
  uint64_t seed = 0;
  AnnotateOptions annotate;
  const SegmenterRules* rules = nullptr;  // null uses the embedded default
};

// Samples up to sample_limit pairs (seeded, order-preserving), annotates
// each, and appends one JSON line per example to out. Failures of single
// examples are logged to stderr and counted, not fatal.
AnnotationReport build_dataset(const std::vector<QueryPassagePair>& pairs, LlmClient& llm,
                               Scorer& teacher, const DatasetOptions& options, std::ostream& out);

std::string training_example_to_json(const TrainingExample& example);
TrainingExample training_example_from_json(std::string_view line, size_t line_no = 1);

void write_training_jsonl(const std::string& path, const std::vector<TrainingExample>& examples);
std::vector<TrainingExample> read_training_jsonl(const std::string& path);

// Built-in annotation prompt with {query}, {numbered_sentences} and
// {answer_language} placeholders.
std::string default_annotate_prompt();

std::string render_annotate_prompt(std::string_view prompt_template, std::string_view query,
                                   const std::vector<std::string>& sentences,
                                   std::string_view answer_language);

}  // namespace prunerank
