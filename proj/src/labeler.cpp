#include "prunerank/labeler.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "prunerank/errors.hpp"
#include "prunerank/unicode.hpp"

namespace prunerank {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::string_view kDefaultPrompt =
    R"(You are given a question and a numbered list of sentences from a retrieved passage.
Answer the question in {answer_language}, using only information stated in the numbered sentences.
After every claim in your answer, cite the sentences supporting it by number in square brackets, for example [2] or [2][5].
If none of the sentences contain information relevant to the question, reply exactly: no relevant information.

Question: {query}

Sentences:
{numbered_sentences}

Answer:
)";

void replace_all(std::string& text, std::string_view needle, std::string_view value) {
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
}

}  // namespace

std::string_view to_string(ExampleSource source) {
  switch (source) {
    case ExampleSource::annotated: return "annotated";
    case ExampleSource::translated: return "translated";
    case ExampleSource::english_original: return "english-original";
  }
  return "english-original";
}

ExampleSource example_source_from_string(std::string_view name) {
  if (name == "annotated") return ExampleSource::annotated;
  if (name == "translated") return ExampleSource::translated;
  if (name == "english-original") return ExampleSource::english_original;
  throw Error("unknown example source: " + std::string(name));
}

CitationParse parse_citations(std::string_view answer, size_t n_sentences) {
  CitationParse out;
  out.labels.assign(n_sentences, 0);
  bool any_valid = false;
  size_t pos = 0;
  // Brackets and digits are ASCII, so a byte scan cannot split a multi-byte
  // codepoint.
  while (true) {
    const size_t open = answer.find('[', pos);
    if (open == std::string_view::npos) break;
    const size_t close = answer.find(']', open + 1);
    if (close == std::string_view::npos) break;  // unterminated, ignore the rest
    const std::string_view inside = answer.substr(open + 1, close - open - 1);
    pos = close + 1;

    const bool digits = !inside.empty() && std::all_of(inside.begin(), inside.end(), [](char c) {
      return c >= '0' && c <= '9';
    });
    if (!digits) {
      out.warnings.push_back({CitationWarning::Kind::malformed,
                              "[" + std::string(inside) + "] is not a sentence number"});
      continue;
    }
    unsigned long long value = 0;
    bool overflow = false;
    for (char c : inside) {
      value = value * 10 + static_cast<unsigned long long>(c - '0');
      if (value > 1000000) {  // far beyond any passage, avoids wraparound
        overflow = true;
        break;
      }
    }
    if (overflow || value < 1 || value > n_sentences) {
      out.warnings.push_back({CitationWarning::Kind::out_of_range,
                              "[" + std::string(inside) + "] cites a sentence that is not there"});
      continue;
    }
    out.labels[value - 1] = 1;
    any_valid = true;
  }
  if (!any_valid) {
    out.warnings.push_back({CitationWarning::Kind::zero_citations, "answer cites no sentence"});
  }
  return out;
}

std::vector<int> make_token_targets(const std::vector<int>& sentence_labels,
                                    const std::vector<size_t>& alignment) {
  std::vector<int> out;
  out.reserve(alignment.size());
  for (size_t s : alignment) {
    if (s >= sentence_labels.size()) {
      throw IndexMismatch("alignment points at sentence " + std::to_string(s) + " but only " +
                          std::to_string(sentence_labels.size()) + " labels exist");
    }
    out.push_back(sentence_labels[s]);
  }
  return out;
}

std::string default_annotate_prompt() { return std::string(kDefaultPrompt); }

std::string render_annotate_prompt(std::string_view prompt_template, std::string_view query,
                                   const std::vector<std::string>& sentences,
                                   std::string_view answer_language) {
  std::string numbered;
  for (size_t i = 0; i < sentences.size(); ++i) {
    if (i > 0) numbered += '\n';
    numbered += "[" + std::to_string(i + 1) + "] " + sentences[i];
  }
  std::string out(prompt_template);
  replace_all(out, "{query}", query);
  replace_all(out, "{numbered_sentences}", numbered);
  replace_all(out, "{answer_language}", answer_language);
  return out;
}

AnnotatedExample annotate(std::string_view query, const SegmentedPassage& passage, LlmClient& llm,
                          Scorer& teacher, const AnnotateOptions& options) {
  std::vector<std::string> sentences;
  sentences.reserve(passage.sentences.size());
  for (const SentenceSpan& s : passage.sentences) {
    sentences.push_back(uni::cp_slice(passage.text, s.start, s.end));
  }

  const std::string tmpl =
      options.prompt_template.empty() ? default_annotate_prompt() : options.prompt_template;
  const std::string prompt = render_annotate_prompt(tmpl, query, sentences, options.language);
  if (uni::cp_length(prompt) > options.max_prompt_chars) {
    throw PromptTooLong("prompt is " + std::to_string(uni::cp_length(prompt)) +
                        " codepoints, limit " + std::to_string(options.max_prompt_chars));
  }

  const std::string answer = llm.generate(prompt, options.max_tokens);
  CitationParse parsed = parse_citations(answer, sentences.size());

  AnnotatedExample out;
  out.example.query = std::string(query);
  out.example.language = options.language;
  out.example.sentences = std::move(sentences);
  out.example.sentence_labels = std::move(parsed.labels);
  out.example.teacher_score = teacher.score(query, passage).passage_score;
  out.example.source = ExampleSource::annotated;
  out.warnings = std::move(parsed.warnings);
  return out;
}

TrainingExample translate_example(const TrainingExample& example, TranslatorClient& translator,
                                  std::string_view target_language, Scorer* rescore_with) {
  if (example.sentences.size() != example.sentence_labels.size()) {
    throw Error("example has " + std::to_string(example.sentences.size()) + " sentences but " +
                std::to_string(example.sentence_labels.size()) + " labels");
  }
  const auto queries = translator.translate({example.query}, target_language);
  if (queries.size() != 1) {
    throw TranslationShapeError("translator returned " + std::to_string(queries.size()) +
                                " strings for one query");
  }
  std::vector<std::string> sentences;
  if (!example.sentences.empty()) {
    sentences = translator.translate(example.sentences, target_language);
    if (sentences.size() != example.sentences.size()) {
      throw TranslationShapeError("translator returned " + std::to_string(sentences.size()) +
                                  " sentences for " + std::to_string(example.sentences.size()));
    }
  }

  TrainingExample out = example;
  out.query = queries[0];
  out.sentences = std::move(sentences);
  out.language = std::string(target_language);
  out.source = ExampleSource::translated;
  if (rescore_with != nullptr) {
    std::string joined;
    for (size_t i = 0; i < out.sentences.size(); ++i) {
      if (i > 0) joined += ' ';
      joined += out.sentences[i];
    }
    out.teacher_score = rescore_with->score(out.query, segment(joined)).passage_score;
  }
  return out;
}

AnnotationReport build_dataset(const std::vector<QueryPassagePair>& pairs, LlmClient& llm,
                               Scorer& teacher, const DatasetOptions& options, std::ostream& out) {
  if (options.sample_limit == 0) {
    throw std::invalid_argument("sample_limit must be positive");
  }
  const SegmenterRules& rules =
      options.rules != nullptr ? *options.rules : SegmenterRules::embedded_default();

  std::vector<size_t> picked(pairs.size());
  std::iota(picked.begin(), picked.end(), size_t{0});
  if (pairs.size() > options.sample_limit) {
    std::mt19937_64 rng(options.seed);
    for (size_t i = picked.size() - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(rng() % (i + 1));
      std::swap(picked[i], picked[j]);
    }
    picked.resize(options.sample_limit);
    std::sort(picked.begin(), picked.end());  // keep input order among survivors
  }

  AnnotationReport report;
  for (size_t idx : picked) {
    const QueryPassagePair& pair = pairs[idx];
    try {
      const SegmentedPassage passage = segment(pair.passage, pair.language, rules);
      AnnotateOptions ao = options.annotate;
      if (!pair.language.empty()) ao.language = pair.language;
      AnnotatedExample annotated = annotate(pair.query, passage, llm, teacher, ao);

      out << training_example_to_json(annotated.example) << '\n';
      ++report.n_examples;
      const auto& labels = annotated.example.sentence_labels;
      if (std::all_of(labels.begin(), labels.end(), [](int l) { return l == 0; })) {
        ++report.n_zero_label;
      }
      for (const CitationWarning& w : annotated.warnings) {
        if (w.kind == CitationWarning::Kind::malformed) ++report.n_malformed_citations;
        if (w.kind == CitationWarning::Kind::out_of_range) ++report.n_out_of_range;
      }
    } catch (const Error& e) {
      ++report.n_skipped;
      std::cerr << "skipping pair " << idx << ": " << e.what() << '\n';
    }
  }
  return report;
}

std::string training_example_to_json(const TrainingExample& example) {
  ojson j;
  j["query"] = example.query;
  j["language"] = example.language;
  j["sentences"] = example.sentences;
  j["labels"] = example.sentence_labels;
  j["teacher_score"] = example.teacher_score;
  j["source"] = std::string(to_string(example.source));
  return j.dump();
}

TrainingExample training_example_from_json(std::string_view line, size_t line_no) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const ojson::exception& e) {
    throw ParseError(line_no, std::string("not valid JSON: ") + e.what());
  }
  try {
    TrainingExample ex;
    ex.query = j.at("query").get<std::string>();
    ex.language = j.at("language").get<std::string>();
    ex.sentences = j.at("sentences").get<std::vector<std::string>>();
    ex.sentence_labels = j.at("labels").get<std::vector<int>>();
    ex.teacher_score = j.at("teacher_score").get<double>();
    ex.source = example_source_from_string(j.at("source").get<std::string>());
    if (ex.sentences.size() != ex.sentence_labels.size()) {
      throw ParseError(line_no, "sentences and labels differ in length");
    }
    for (int l : ex.sentence_labels) {
      if (l != 0 && l != 1) throw ParseError(line_no, "labels must be 0 or 1");
    }
    if (!(ex.teacher_score >= 0.0 && ex.teacher_score <= 1.0)) {
      throw ParseError(line_no, "teacher_score must be in [0, 1]");
    }
    return ex;
  } catch (const ojson::exception& e) {
    throw ParseError(line_no, std::string("bad training example: ") + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(line_no, e.what());
  }
}

void write_training_jsonl(const std::string& path, const std::vector<TrainingExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  for (const TrainingExample& ex : examples) {
    out << training_example_to_json(ex) << '\n';
  }
  if (!out) throw Error("failed writing: " + path);
}

std::vector<TrainingExample> read_training_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::vector<TrainingExample> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(training_example_from_json(line, line_no));
  }
  return out;
}

}  // namespace prunerank
