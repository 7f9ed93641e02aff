#include "prunerank/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "prunerank/errors.hpp"
#include "prunerank/unicode.hpp"

namespace prunerank {

namespace {

using ojson = nlohmann::ordered_json;

// Casefold, collapse whitespace runs to one space, trim.
std::u32string normalize(std::string_view text) {
  const std::u32string folded = uni::fold_case(uni::decode_utf8(text));
  std::u32string out;
  out.reserve(folded.size());
  bool pending_space = false;
  for (char32_t cp : folded) {
    if (uni::is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(cp);
  }
  return out;
}

}  // namespace

double char3gram_recall(std::string_view label, std::string_view answer) {
  const std::u32string l = normalize(label);
  const std::u32string a = normalize(answer);
  if (l.size() < 3) {
    return a.find(l) != std::u32string::npos ? 1.0 : 0.0;
  }
  const auto label_grams = uni::char3gram_set(l);
  const auto answer_grams = uni::char3gram_set(a);
  size_t hits = 0;
  for (const std::string& g : label_grams) hits += answer_grams.count(g);
  return static_cast<double>(hits) / static_cast<double>(label_grams.size());
}

int choice_accuracy(std::string_view predicted, std::string_view gold) {
  return normalize(predicted) == normalize(gold) ? 1 : 0;
}

int choice_accuracy(std::string_view predicted, std::string_view gold,
                    const std::vector<std::string>& option_set) {
  const std::u32string p = normalize(predicted);
  const bool known = std::any_of(option_set.begin(), option_set.end(),
                                 [&](const std::string& o) { return normalize(o) == p; });
  if (!known) {
    throw UnknownLabel("prediction '" + std::string(predicted) + "' is not an option");
  }
  return p == normalize(gold) ? 1 : 0;
}

double recall_at_k(const std::vector<std::string>& ranking,
                   const std::vector<std::string>& relevant, int k) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const std::set<std::string> rel(relevant.begin(), relevant.end());
  if (rel.empty()) throw EmptyRelevantSet("relevant set is empty");
  size_t hits = 0;
  const size_t depth = std::min(ranking.size(), static_cast<size_t>(k));
  for (size_t i = 0; i < depth; ++i) hits += rel.count(ranking[i]);
  return static_cast<double>(hits) / static_cast<double>(rel.size());
}

double ndcg_at_k(const std::vector<std::string>& ranking,
                 const std::vector<std::string>& relevant, int k) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const std::set<std::string> rel(relevant.begin(), relevant.end());
  if (rel.empty()) return 0.0;
  double dcg = 0.0;
  const size_t depth = std::min(ranking.size(), static_cast<size_t>(k));
  for (size_t i = 0; i < depth; ++i) {
    if (rel.count(ranking[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  const size_t ideal = std::min(rel.size(), static_cast<size_t>(k));
  for (size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

std::string extractive_answer_stub(std::string_view query, std::string_view context) {
  const SegmentedPassage seg = segment(context);
  if (seg.sentences.empty()) return "";
  const auto qg = uni::char3gram_set(uni::fold_case(uni::decode_utf8(query)));
  const std::u32string cps = uni::decode_utf8(seg.text);

  std::vector<size_t> counts(seg.sentences.size(), 0);
  size_t best = 0;
  for (size_t s = 0; s < seg.sentences.size(); ++s) {
    const auto& span = seg.sentences[s];
    const auto grams = uni::char3gram_set(
        uni::fold_case(std::u32string_view(cps).substr(span.start, span.end - span.start)));
    for (const std::string& g : grams) counts[s] += qg.count(g);
    best = std::max(best, counts[s]);
  }
  if (best == 0) return "";  // nothing in the context touches the query

  std::string out;
  for (size_t s = 0; s < seg.sentences.size(); ++s) {
    if (counts[s] != best) continue;
    if (!out.empty()) out += ' ';
    out += uni::cp_slice(seg.text, seg.sentences[s].start, seg.sentences[s].end);
  }
  return out;
}

namespace {

struct Accumulator {
  size_t n = 0;
  double compression = 0.0;
  double metric = 0.0;
};

}  // namespace

std::vector<ParetoPoint> sweep(const std::vector<EvalRecord>& records,
                               const std::vector<double>& thresholds, Scorer& scorer,
                               const SweepOptions& options) {
  if (thresholds.empty()) throw std::invalid_argument("no thresholds given");
  for (double t : thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw std::invalid_argument("threshold outside [0, 1]: " + std::to_string(t));
    }
  }
  if (options.top_k_passages < 1) throw std::invalid_argument("top_k_passages must be at least 1");
  const SegmenterRules& rules =
      options.rules != nullptr ? *options.rules : SegmenterRules::embedded_default();
  const Generator generate = options.generator
                                 ? options.generator
                                 : Generator([](std::string_view q, std::string_view ctx) {
                                     return extractive_answer_stub(q, ctx);
                                   });

  // Segmentation does not depend on the threshold, so do it once.
  struct Prepared {
    const EvalRecord* record;
    std::vector<SegmentedPassage> passages;
  };
  std::vector<Prepared> prepared;
  for (const EvalRecord& r : records) {
    const bool has_gold = options.metric == EvalMetric::char3gram ? !r.gold_answers.empty()
                                                                  : r.gold_choice.has_value();
    if (!has_gold || r.passages.empty()) continue;
    Prepared p{&r, {}};
    const size_t k = std::min(r.passages.size(), static_cast<size_t>(options.top_k_passages));
    for (size_t i = 0; i < k; ++i) {
      p.passages.push_back(segment(r.passages[i], r.language, rules));
    }
    prepared.push_back(std::move(p));
  }

  std::vector<ParetoPoint> out;
  for (double threshold : thresholds) {
    std::map<std::string, Accumulator> per_language;
    for (const Prepared& p : prepared) {
      try {
        std::vector<PrunedPassage> pruned;
        pruned.reserve(p.passages.size());
        for (const SegmentedPassage& passage : p.passages) {
          if (options.kind == PrunerKind::engine) {
            PruningOptions po;
            po.threshold = threshold;
            po.always_keep_first = options.always_keep_first;
            po.basis = options.basis;
            pruned.push_back(prune(p.record->query, passage, scorer, po));
          } else {
            pruned.push_back(dslr_prune(p.record->query, passage, scorer, threshold, options.basis));
          }
        }
        std::string context;
        for (const PrunedPassage& pp : pruned) {
          if (pp.pruned_text.empty()) continue;
          if (!context.empty()) context += ' ';
          context += pp.pruned_text;
        }
        const std::string answer = generate(p.record->query, context);
        double metric = 0.0;
        if (options.metric == EvalMetric::char3gram) {
          for (const std::string& gold : p.record->gold_answers) {
            metric = std::max(metric, char3gram_recall(gold, answer));
          }
        } else {
          metric = choice_accuracy(answer, *p.record->gold_choice);
        }
        const std::string lang = p.record->language.empty() ? "und" : p.record->language;
        Accumulator& acc = per_language[lang];
        ++acc.n;
        acc.compression += batch_compression(pruned);
        acc.metric += metric;
      } catch (const Error& e) {
        std::cerr << "sweep: skipping a record at threshold " << threshold << ": " << e.what()
                  << '\n';
      }
    }

    Accumulator all;
    size_t n_languages = 0;
    for (const auto& [lang, acc] : per_language) {
      ParetoPoint row;
      row.threshold = threshold;
      row.language = lang;
      row.n_examples = acc.n;
      row.mean_compression = acc.compression / static_cast<double>(acc.n);
      row.mean_metric = acc.metric / static_cast<double>(acc.n);
      out.push_back(row);
      all.n += acc.n;
      all.compression += row.mean_compression;
      all.metric += row.mean_metric;
      ++n_languages;
    }
    if (n_languages > 0) {
      ParetoPoint row;
      row.threshold = threshold;
      row.language = "ALL";
      row.n_examples = all.n;
      row.mean_compression = all.compression / static_cast<double>(n_languages);
      row.mean_metric = all.metric / static_cast<double>(n_languages);
      out.push_back(row);
    }
  }
  return out;
}

std::string format_double(double value) { return ojson(value).dump(); }

std::string eval_record_to_json(const EvalRecord& record) {
  ojson j;
  j["query"] = record.query;
  j["language"] = record.language;
  j["passages"] = record.passages;
  if (!record.gold_answers.empty()) j["gold_answers"] = record.gold_answers;
  if (record.gold_choice) j["gold_choice"] = *record.gold_choice;
  if (record.relevant_ids) j["relevant_ids"] = *record.relevant_ids;
  if (record.ranking) j["ranking"] = *record.ranking;
  return j.dump();
}

EvalRecord eval_record_from_json(std::string_view line, size_t line_no) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const ojson::exception& e) {
    throw ParseError(line_no, std::string("not valid JSON: ") + e.what());
  }
  try {
    EvalRecord r;
    r.query = j.at("query").get<std::string>();
    r.language = j.at("language").get<std::string>();
    r.passages = j.at("passages").get<std::vector<std::string>>();
    if (j.contains("gold_answers")) {
      r.gold_answers = j["gold_answers"].get<std::vector<std::string>>();
    }
    if (j.contains("gold_choice")) r.gold_choice = j["gold_choice"].get<std::string>();
    if (j.contains("relevant_ids")) {
      r.relevant_ids = j["relevant_ids"].get<std::vector<std::string>>();
    }
    if (j.contains("ranking")) r.ranking = j["ranking"].get<std::vector<std::string>>();
    if (r.gold_answers.empty() && !r.gold_choice && !r.relevant_ids) {
      throw ParseError(line_no, "record needs gold_answers, gold_choice or relevant_ids");
    }
    return r;
  } catch (const ojson::exception& e) {
    throw ParseError(line_no, std::string("bad eval record: ") + e.what());
  }
}

std::vector<EvalRecord> load_eval_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::vector<EvalRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(eval_record_from_json(line, line_no));
  }
  return out;
}

void write_eval_dataset(const std::string& path, const std::vector<EvalRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  for (const EvalRecord& r : records) out << eval_record_to_json(r) << '\n';
  if (!out) throw Error("failed writing: " + path);
}

namespace {

constexpr std::string_view kReportHeader = "threshold,language,n,compression,metric";

}  // namespace

void write_report_csv(const std::vector<ParetoPoint>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << kReportHeader << '\n';
  for (const ParetoPoint& r : rows) {
    out << format_double(r.threshold) << ',' << r.language << ',' << r.n_examples << ','
        << format_double(r.mean_compression) << ',' << format_double(r.mean_metric) << '\n';
  }
  if (!out) throw Error("failed writing: " + path);
}

std::vector<ParetoPoint> read_report_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) {
    throw ParseError(1, "expected header '" + std::string(kReportHeader) + "'");
  }
  std::vector<ParetoPoint> out;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t pos = 0;
    while (true) {
      const size_t comma = line.find(',', pos);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(pos));
        break;
      }
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    if (fields.size() != 5) throw ParseError(line_no, "expected 5 fields");
    try {
      ParetoPoint r;
      r.threshold = std::stod(fields[0]);
      r.language = fields[1];
      r.n_examples = std::stoull(fields[2]);
      r.mean_compression = std::stod(fields[3]);
      r.mean_metric = std::stod(fields[4]);
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError(line_no, std::string("bad report row: ") + e.what());
    }
  }
  return out;
}

void write_report_jsonl(const std::vector<ParetoPoint>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  for (const ParetoPoint& r : rows) {
    ojson j;
    j["threshold"] = r.threshold;
    j["language"] = r.language;
    j["n"] = r.n_examples;
    j["compression"] = r.mean_compression;
    j["metric"] = r.mean_metric;
    out << j.dump() << '\n';
  }
  if (!out) throw Error("failed writing: " + path);
}

std::vector<ParetoPoint> read_report_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::vector<ParetoPoint> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const ojson j = ojson::parse(line);
      ParetoPoint r;
      r.threshold = j.at("threshold").get<double>();
      r.language = j.at("language").get<std::string>();
      r.n_examples = j.at("n").get<size_t>();
      r.mean_compression = j.at("compression").get<double>();
      r.mean_metric = j.at("metric").get<double>();
      out.push_back(std::move(r));
    } catch (const ojson::exception& e) {
      throw ParseError(line_no, std::string("bad report row: ") + e.what());
    }
  }
  return out;
}

}  // namespace prunerank
