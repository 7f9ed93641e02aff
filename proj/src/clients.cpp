#include "prunerank/clients.hpp"

#include <httplib.h>
#include <json.hpp>

#include "prunerank/errors.hpp"

namespace prunerank {

namespace {

using json = nlohmann::json;

json post_json(const std::string& base_url, int timeout_ms, const std::string& path,
               const json& body, const char* what) {
  httplib::Client cli(base_url);
  cli.set_connection_timeout(0, timeout_ms * 1000);
  cli.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  auto res = cli.Post(path, body.dump(), "application/json");
  if (!res) {
    throw ClientUnavailable(std::string(what) + " endpoint unreachable: " + base_url + " (" +
                            httplib::to_string(res.error()) + ")");
  }
  if (res->status != 200) {
    throw ClientUnavailable(std::string(what) + " endpoint returned HTTP " +
                            std::to_string(res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw ClientUnavailable(std::string(what) + " reply is not JSON: " + e.what());
  }
}

}  // namespace

HttpLlmClient::HttpLlmClient(std::string base_url, int timeout_ms)
    : base_url_(std::move(base_url)), timeout_ms_(timeout_ms) {
  if (base_url_.empty()) throw ConfigError("llm client needs an endpoint");
}

std::string HttpLlmClient::generate(const std::string& prompt, int max_tokens) {
  json body;
  body["prompt"] = prompt;
  body["max_tokens"] = max_tokens;
  const json reply = post_json(base_url_, timeout_ms_, "/v1/generate", body, "llm");
  if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
    throw ClientUnavailable("llm reply has no text field");
  }
  return reply["text"].get<std::string>();
}

HttpTranslatorClient::HttpTranslatorClient(std::string base_url, int timeout_ms)
    : base_url_(std::move(base_url)), timeout_ms_(timeout_ms) {
  if (base_url_.empty()) throw ConfigError("translator client needs an endpoint");
}

std::vector<std::string> HttpTranslatorClient::translate(const std::vector<std::string>& sentences,
                                                         std::string_view target_language) {
  json body;
  body["sentences"] = sentences;
  body["target_language"] = std::string(target_language);
  const json reply = post_json(base_url_, timeout_ms_, "/v1/translate", body, "translator");
  if (!reply.is_object() || !reply.contains("sentences") || !reply["sentences"].is_array()) {
    throw ClientUnavailable("translator reply has no sentences field");
  }
  std::vector<std::string> out;
  for (const json& s : reply["sentences"]) {
    if (!s.is_string()) throw ClientUnavailable("translator reply holds a non-string sentence");
    out.push_back(s.get<std::string>());
  }
  return out;
}

}  // namespace prunerank
