#include "prunerank/service.hpp"

#include <algorithm>
#include <numeric>

#include <httplib.h>
#include <json.hpp>

#include "prunerank/errors.hpp"
#include "prunerank/pruner.hpp"
#include "prunerank/segmenter.hpp"

namespace prunerank {

namespace {

using ojson = nlohmann::ordered_json;

void reply_error(httplib::Response& res, int status, const std::string& message) {
  ojson j;
  j["error"]["message"] = message;
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

// Shared request shape of both POST endpoints.
struct BatchRequest {
  std::string query;
  std::vector<std::string> passages;
  ojson body;
};

struct BatchTooLarge {};

BatchRequest parse_batch_request(const std::string& body, int max_batch) {
  BatchRequest out;
  try {
    out.body = ojson::parse(body);
  } catch (const ojson::exception& e) {
    throw std::invalid_argument(std::string("body is not JSON: ") + e.what());
  }
  if (!out.body.is_object() || !out.body.contains("query") || !out.body["query"].is_string()) {
    throw std::invalid_argument("body needs a string query");
  }
  out.query = out.body["query"].get<std::string>();
  if (out.query.empty()) throw std::invalid_argument("query is empty");
  if (!out.body.contains("passages") || !out.body["passages"].is_array()) {
    throw std::invalid_argument("body needs a passages array");
  }
  for (const ojson& p : out.body["passages"]) {
    if (!p.is_string()) throw std::invalid_argument("passages must be strings");
    out.passages.push_back(p.get<std::string>());
  }
  if (out.passages.size() > static_cast<size_t>(max_batch)) {
    throw BatchTooLarge{};
  }
  return out;
}

}  // namespace

std::pair<std::string, int> split_listen_address(const std::string& address) {
  const size_t colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= address.size()) {
    throw ConfigError("listen address must be host:port, got '" + address + "'");
  }
  int port = 0;
  try {
    size_t used = 0;
    port = std::stoi(address.substr(colon + 1), &used);
    if (used != address.size() - colon - 1) throw ConfigError("");
  } catch (const std::exception&) {
    throw ConfigError("listen address has a bad port: '" + address + "'");
  }
  if (port < 0 || port > 65535) {
    throw ConfigError("listen port out of range: " + std::to_string(port));
  }
  return {address.substr(0, colon), port};
}

PruningService::PruningService(ServiceConfig config)
    : config_(std::move(config)),
      scorer_(make_scorer(config_.scorer)),
      server_(std::make_unique<httplib::Server>()) {
  setup_routes();
}

PruningService::~PruningService() {
  if (server_ && server_->is_running()) server_->stop();
}

void PruningService::check_scorer() const {
  if (config_.scorer.backend != ScorerBackend::remote) return;
  httplib::Client cli(config_.scorer.endpoint);
  cli.set_connection_timeout(0, config_.scorer.timeout_ms * 1000);
  auto res = cli.Get("/healthz");
  if (!res) {
    throw RemoteUnavailable("scorer endpoint does not answer: " + config_.scorer.endpoint);
  }
}

void PruningService::setup_routes() {
  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });

  server_->Post("/v1/prune", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      BatchRequest batch;
      try {
        batch = parse_batch_request(req.body, config_.max_batch);
      } catch (const BatchTooLarge&) {
        reply_error(res, 413, "batch exceeds max_batch of " + std::to_string(config_.max_batch));
        return;
      }
      PruningOptions options;
      options.threshold = config_.default_threshold;
      if (batch.body.contains("threshold")) {
        if (!batch.body["threshold"].is_number()) {
          throw std::invalid_argument("threshold must be a number");
        }
        options.threshold = batch.body["threshold"].get<double>();
        if (!(options.threshold >= 0.0 && options.threshold <= 1.0)) {
          throw std::invalid_argument("threshold must be in [0, 1]");
        }
      }
      std::optional<int> top_k;
      if (batch.body.contains("top_k")) {
        if (!batch.body["top_k"].is_number_integer() || batch.body["top_k"].get<int>() < 1) {
          throw std::invalid_argument("top_k must be a positive integer");
        }
        top_k = batch.body["top_k"].get<int>();
      }

      std::vector<PrunedPassage> pruned;
      pruned.reserve(batch.passages.size());
      for (const std::string& text : batch.passages) {
        pruned.push_back(prune(batch.query, segment(text), *scorer_, options));
      }

      // Rank by score, ties broken by input position.
      std::vector<size_t> rank(pruned.size(), 0);
      if (top_k) {
        std::vector<size_t> order(pruned.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
          return pruned[a].passage_score > pruned[b].passage_score;
        });
        for (size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos + 1;
      }

      ojson results = ojson::array();
      for (size_t i = 0; i < pruned.size(); ++i) {
        ojson r;
        r["score"] = pruned[i].passage_score;
        r["kept"] = pruned[i].kept;
        r["pruned_text"] = pruned[i].pruned_text;
        r["compression"] = pruned[i].compression;
        if (top_k) r["rank"] = rank[i];
        results.push_back(std::move(r));
      }
      ojson out;
      out["results"] = std::move(results);
      out["model_info"] = scorer_->info();
      res.set_content(out.dump(), "application/json");
    } catch (const std::invalid_argument& e) {
      reply_error(res, 400, e.what());
    } catch (const RemoteUnavailable& e) {
      reply_error(res, 502, e.what());
    } catch (const MalformedResponse& e) {
      reply_error(res, 502, e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });

  server_->Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      BatchRequest batch;
      try {
        batch = parse_batch_request(req.body, config_.max_batch);
      } catch (const BatchTooLarge&) {
        reply_error(res, 413, "batch exceeds max_batch of " + std::to_string(config_.max_batch));
        return;
      }
      bool return_tokens = true;
      if (batch.body.contains("return_tokens")) {
        if (!batch.body["return_tokens"].is_boolean()) {
          throw std::invalid_argument("return_tokens must be a boolean");
        }
        return_tokens = batch.body["return_tokens"].get<bool>();
      }

      ojson results = ojson::array();
      for (const std::string& text : batch.passages) {
        const ScoredPassage sp = scorer_->score(batch.query, segment(text));
        ojson r;
        r["score"] = sp.passage_score;
        if (return_tokens) {
          ojson tokens = ojson::array();
          for (const TokenSpan& t : sp.tokens) {
            ojson tj;
            tj["start"] = t.start;
            tj["end"] = t.end;
            tj["special"] = t.is_special;
            tokens.push_back(std::move(tj));
          }
          r["tokens"] = std::move(tokens);
          r["values"] = sp.token_values;
        }
        results.push_back(std::move(r));
      }
      ojson out;
      out["results"] = std::move(results);
      out["model_info"] = scorer_->info();
      res.set_content(out.dump(), "application/json");
    } catch (const std::invalid_argument& e) {
      reply_error(res, 400, e.what());
    } catch (const RemoteUnavailable& e) {
      reply_error(res, 502, e.what());
    } catch (const MalformedResponse& e) {
      reply_error(res, 502, e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });
}

int PruningService::bind() {
  // httplib's default options include SO_REUSEPORT, which would let a second
  // instance share an occupied port instead of failing. Keep only the
  // quick-restart option.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  const auto [host, port] = split_listen_address(config_.listen_address);
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw BindError("cannot bind " + host + " to any port");
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw BindError("cannot bind " + config_.listen_address);
  }
  return port;
}

bool PruningService::serve() { return server_->listen_after_bind(); }

void PruningService::wait_ready() const { server_->wait_until_ready(); }

void PruningService::stop() { server_->stop(); }

}  // namespace prunerank
