#include "prunerank/scorer.hpp"

#include <algorithm>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "prunerank/errors.hpp"
#include "prunerank/trainer.hpp"
#include "prunerank/unicode.hpp"

namespace prunerank {

namespace {

using json = nlohmann::json;

bool is_separator(char32_t cp) {
  switch (cp) {
    case U'.':
    case U'!':
    case U'?':
    case 0x2026:  // …
    case 0x3002:  // 。
    case 0xFF01:  // ！
    case 0xFF1F:  // ？
    case 0x061F:  // ؟
    case 0x0964:  // ।
    case 0x0965:  // ॥
    case U',':
    case U';':
    case U':':
    case 0x3001:  // 、
    case 0xFF0C:  // ，
    case 0xFF1B:  // ；
    case 0xFF1A:  // ：
      return true;
    default:
      return false;
  }
}

std::u32string trimmed_fold(std::string_view text) {
  std::u32string cps = uni::decode_utf8(text);
  size_t b = 0, e = cps.size();
  while (b < e && uni::is_space(cps[b])) ++b;
  while (e > b && uni::is_space(cps[e - 1])) --e;
  return uni::fold_case(std::u32string_view(cps).substr(b, e - b));
}

double overlap_value(const std::unordered_set<std::string>& token_grams,
                     const std::unordered_set<std::string>& query_grams) {
  size_t hits = 0;
  for (const std::string& g : token_grams) hits += query_grams.count(g);
  const double overlap =
      token_grams.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(token_grams.size());
  return 0.02 + 0.96 * overlap;
}

}  // namespace

std::string_view to_string(ScorerBackend backend) {
  switch (backend) {
    case ScorerBackend::lexical: return "lexical";
    case ScorerBackend::remote: return "remote";
    case ScorerBackend::toy_model: return "toy-model";
  }
  return "lexical";
}

ScorerBackend scorer_backend_from_string(std::string_view name) {
  if (name == "lexical") return ScorerBackend::lexical;
  if (name == "remote") return ScorerBackend::remote;
  if (name == "toy-model" || name == "toy_model") return ScorerBackend::toy_model;
  throw ConfigError("unknown scorer backend: " + std::string(name));
}

size_t ScoredPassage::content_token_count() const {
  return static_cast<size_t>(
      std::count_if(tokens.begin(), tokens.end(), [](const TokenSpan& t) { return !t.is_special; }));
}

std::vector<ScoredPassage> Scorer::score_batch(std::string_view query,
                                               const std::vector<SegmentedPassage>& passages) {
  std::vector<ScoredPassage> out;
  out.reserve(passages.size());
  for (const SegmentedPassage& p : passages) out.push_back(score(query, p));
  return out;
}

std::vector<TokenSpan> tokenize_for_scoring(std::string_view text) {
  const std::u32string cps = uni::decode_utf8(text);
  const size_t n = cps.size();
  std::vector<TokenSpan> out;
  size_t i = 0;
  while (i < n) {
    if (uni::is_space(cps[i])) {
      ++i;
      continue;
    }
    if (is_separator(cps[i])) {
      out.push_back({i, i + 1, false});
      ++i;
      continue;
    }
    size_t j = i + 1;
    while (j < n && !uni::is_space(cps[j]) && !is_separator(cps[j])) ++j;
    out.push_back({i, j, false});
    i = j;
  }
  return out;
}

double lexical_token_value(std::string_view token_text, std::string_view query) {
  const std::u32string tok = trimmed_fold(token_text);
  if (tok.empty()) {
    throw std::invalid_argument("token_text is empty after whitespace trim");
  }
  const auto tg = uni::char3gram_set(tok);
  const auto qg = uni::char3gram_set(uni::fold_case(uni::decode_utf8(query)));
  return overlap_value(tg, qg);
}

double lexical_passage_score(const std::vector<double>& token_values) {
  if (token_values.empty()) throw EmptyPassage("no token values to average");
  double sum = 0.0;
  for (double v : token_values) sum += v;
  return sum / static_cast<double>(token_values.size());
}

ScoredPassage LexicalScorer::score(std::string_view query, const SegmentedPassage& passage) {
  if (query.empty()) throw std::invalid_argument("query is empty");
  ScoredPassage out;
  out.tokens = tokenize_for_scoring(passage.text);
  out.token_values.reserve(out.tokens.size());
  const auto qg = uni::char3gram_set(uni::fold_case(uni::decode_utf8(query)));
  const std::u32string cps = uni::decode_utf8(passage.text);
  for (const TokenSpan& t : out.tokens) {
    const std::u32string tok =
        uni::fold_case(std::u32string_view(cps).substr(t.start, t.end - t.start));
    out.token_values.push_back(overlap_value(uni::char3gram_set(tok), qg));
  }
  out.passage_score = out.token_values.empty() ? 0.0 : lexical_passage_score(out.token_values);
  return out;
}

RemoteScorer::RemoteScorer(std::string endpoint, int timeout_ms, int batch_size)
    : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms), batch_size_(std::max(1, batch_size)) {
  if (endpoint_.empty()) throw ConfigError("remote scorer needs an endpoint");
}

ScoredPassage RemoteScorer::score(std::string_view query, const SegmentedPassage& passage) {
  return post_batch(query, {&passage}).front();
}

std::vector<ScoredPassage> RemoteScorer::score_batch(std::string_view query,
                                                     const std::vector<SegmentedPassage>& passages) {
  std::vector<ScoredPassage> out;
  out.reserve(passages.size());
  for (size_t i = 0; i < passages.size(); i += static_cast<size_t>(batch_size_)) {
    std::vector<const SegmentedPassage*> chunk;
    for (size_t j = i; j < passages.size() && j < i + static_cast<size_t>(batch_size_); ++j) {
      chunk.push_back(&passages[j]);
    }
    auto scored = post_batch(query, chunk);
    out.insert(out.end(), std::make_move_iterator(scored.begin()),
               std::make_move_iterator(scored.end()));
  }
  return out;
}

std::vector<ScoredPassage> RemoteScorer::post_batch(
    std::string_view query, const std::vector<const SegmentedPassage*>& passages) {
  if (query.empty()) throw std::invalid_argument("query is empty");
  json body;
  body["query"] = std::string(query);
  auto& arr = body["passages"] = json::array();
  for (const SegmentedPassage* p : passages) arr.push_back(p->text);
  body["return_tokens"] = true;

  httplib::Client cli(endpoint_);
  cli.set_connection_timeout(0, timeout_ms_ * 1000);
  cli.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
  auto res = cli.Post("/v1/score", body.dump(), "application/json");
  if (!res) {
    throw RemoteUnavailable("scorer endpoint unreachable: " + endpoint_ + " (" +
                            httplib::to_string(res.error()) + ")");
  }
  if (res->status >= 500) {
    throw RemoteUnavailable("scorer endpoint returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw MalformedResponse("scorer endpoint rejected request with HTTP " +
                            std::to_string(res->status));
  }

  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("scorer reply is not JSON: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("results") || !reply["results"].is_array() ||
      reply["results"].size() != passages.size()) {
    throw MalformedResponse("scorer reply has no result per passage");
  }

  std::vector<ScoredPassage> out;
  out.reserve(passages.size());
  for (const json& r : reply["results"]) {
    if (!r.is_object() || !r.contains("score") || !r["score"].is_number() ||
        !r.contains("tokens") || !r["tokens"].is_array() || !r.contains("values") ||
        !r["values"].is_array()) {
      throw MalformedResponse("scorer result is missing score/tokens/values");
    }
    ScoredPassage sp;
    sp.passage_score = r["score"].get<double>();
    for (const json& t : r["tokens"]) {
      if (!t.is_object() || !t.contains("start") || !t.contains("end")) {
        throw MalformedResponse("scorer token is missing offsets");
      }
      TokenSpan span;
      span.start = t["start"].get<size_t>();
      span.end = t["end"].get<size_t>();
      span.is_special = t.value("special", false);
      if (span.end < span.start) throw MalformedResponse("scorer token has end < start");
      sp.tokens.push_back(span);
    }
    for (const json& v : r["values"]) {
      if (!v.is_number()) throw MalformedResponse("scorer value is not a number");
      const double d = v.get<double>();
      if (!(d > 0.0 && d < 1.0)) {
        throw MalformedResponse("scorer value outside (0, 1): " + std::to_string(d));
      }
      sp.token_values.push_back(d);
    }
    if (sp.token_values.size() != sp.content_token_count()) {
      throw MalformedResponse("scorer values do not match content token count");
    }
    out.push_back(std::move(sp));
  }
  return out;
}

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config) {
  switch (config.backend) {
    case ScorerBackend::lexical:
      return std::make_unique<LexicalScorer>();
    case ScorerBackend::remote:
      if (config.endpoint.empty()) {
        throw ConfigError("scorer backend 'remote' needs an endpoint");
      }
      return std::make_unique<RemoteScorer>(config.endpoint, config.timeout_ms, config.batch_size);
    case ScorerBackend::toy_model:
      if (config.model_path.empty()) {
        throw ConfigError("scorer backend 'toy-model' needs a model path");
      }
      return std::make_unique<ToyModelScorer>(config.model_path);
  }
  throw ConfigError("unknown scorer backend");
}

ScoredPassage score(std::string_view query, const SegmentedPassage& passage,
                    const ScorerConfig& config) {
  return make_scorer(config)->score(query, passage);
}

}  // namespace prunerank
