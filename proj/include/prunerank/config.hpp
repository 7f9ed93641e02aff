#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "prunerank/pruner.hpp"
#include "prunerank/scorer.hpp"

namespace prunerank {

struct ServiceConfig {
  std::string listen_address = "127.0.0.1:8080";
  ScorerConfig scorer;
  double default_threshold = 0.5;
  int max_batch = 64;
  int request_timeout_ms = 30000;
};

// Everything the CLI and service need, after layering defaults, config file,
// environment and flags.
struct AppConfig {
  ServiceConfig service;
  PruningOptions pruning;
};

// Section -> key -> raw value of an INI-style file: [section] headers,
// key = value lines, # comments.
using KvSections = std::map<std::string, std::map<std::string, std::string>>;

KvSections parse_config_text(std::string_view text);
KvSections parse_config_file(const std::string& path);

// Optional per-field values collected from command-line flags.
struct ConfigOverrides {
  std::optional<std::string> listen_address;
  std::optional<std::string> backend;
  std::optional<std::string> endpoint;
  std::optional<std::string> model_path;
  std::optional<int> batch_size;
  std::optional<int> timeout_ms;
  std::optional<double> threshold;
  std::optional<bool> always_keep_first;
  std::optional<std::string> basis;
  std::optional<int> max_batch;
};

using EnvLookup = std::function<const char*(const char*)>;

// Resolution order, weakest first: built-in defaults, config file (path from
// the flag, else PRUNERANK_CONFIG), environment variables
// (PRUNERANK_SCORER_ENDPOINT, PRUNERANK_THRESHOLD), then flags.
AppConfig resolve_config(const std::optional<std::string>& config_path_flag,
                         const ConfigOverrides& overrides, const EnvLookup& getenv_fn);

// resolve_config against the process environment.
AppConfig resolve_config(const std::optional<std::string>& config_path_flag,
                         const ConfigOverrides& overrides);

}  // namespace prunerank
