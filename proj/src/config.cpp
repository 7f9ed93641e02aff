#include "prunerank/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "prunerank/errors.hpp"

namespace prunerank {

namespace {

std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& value, const std::string& what) {
  try {
    size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size()) throw ConfigError("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(what + " is not a number: " + value);
  }
}

int parse_int(const std::string& value, const std::string& what) {
  try {
    size_t used = 0;
    const int i = std::stoi(value, &used);
    if (used != value.size()) throw ConfigError("");
    return i;
  } catch (const std::exception&) {
    throw ConfigError(what + " is not an integer: " + value);
  }
}

bool parse_bool(const std::string& value, const std::string& what) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(what + " is not a boolean: " + value);
}

void check_threshold(double t, const std::string& origin) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ConfigError(origin + " threshold must be in [0, 1], got " + std::to_string(t));
  }
}

}  // namespace

KvSections parse_config_text(std::string_view text) {
  KvSections out;
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  std::string section;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    if (sv.front() == '[') {
      if (sv.back() != ']' || sv.size() < 3) {
        throw ParseError(line_no, "malformed section header: " + std::string(sv));
      }
      section = std::string(trim(sv.substr(1, sv.size() - 2)));
      out[section];
      continue;
    }
    const size_t eq = sv.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(line_no, "expected key = value: " + std::string(sv));
    }
    if (section.empty()) {
      throw ParseError(line_no, "key outside any [section]: " + std::string(sv));
    }
    const std::string key{trim(sv.substr(0, eq))};
    const std::string value{trim(sv.substr(eq + 1))};
    if (key.empty()) throw ParseError(line_no, "empty key");
    out[section][key] = value;
  }
  return out;
}

KvSections parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const ParseError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

AppConfig resolve_config(const std::optional<std::string>& config_path_flag,
                         const ConfigOverrides& overrides, const EnvLookup& getenv_fn) {
  AppConfig cfg;

  // Layer 2: config file.
  std::optional<std::string> path = config_path_flag;
  if (!path) {
    if (const char* env_path = getenv_fn("PRUNERANK_CONFIG"); env_path && *env_path) {
      path = std::string(env_path);
    }
  }
  if (path) {
    const KvSections file = parse_config_file(*path);
    for (const auto& [section, entries] : file) {
      for (const auto& [key, value] : entries) {
        const std::string origin = "[" + section + "] " + key;
        if (section == "service") {
          if (key == "listen_address") cfg.service.listen_address = value;
          else if (key == "max_batch") cfg.service.max_batch = parse_int(value, origin);
          else if (key == "request_timeout_ms") cfg.service.request_timeout_ms = parse_int(value, origin);
          else throw ConfigError("unknown key " + origin);
        } else if (section == "scorer") {
          if (key == "backend") cfg.service.scorer.backend = scorer_backend_from_string(value);
          else if (key == "endpoint") cfg.service.scorer.endpoint = value;
          else if (key == "model_path") cfg.service.scorer.model_path = value;
          else if (key == "batch_size") cfg.service.scorer.batch_size = parse_int(value, origin);
          else if (key == "timeout_ms") cfg.service.scorer.timeout_ms = parse_int(value, origin);
          else throw ConfigError("unknown key " + origin);
        } else if (section == "pruning") {
          if (key == "threshold") {
            cfg.pruning.threshold = parse_double(value, origin);
            check_threshold(cfg.pruning.threshold, origin);
          } else if (key == "always_keep_first") {
            cfg.pruning.always_keep_first = parse_bool(value, origin);
          } else if (key == "basis") {
            cfg.pruning.basis = compression_basis_from_string(value);
          } else {
            throw ConfigError("unknown key " + origin);
          }
        } else {
          throw ConfigError("unknown section [" + section + "]");
        }
      }
    }
  }

  // Layer 3: environment.
  if (const char* endpoint = getenv_fn("PRUNERANK_SCORER_ENDPOINT"); endpoint && *endpoint) {
    cfg.service.scorer.endpoint = endpoint;
  }
  if (const char* threshold = getenv_fn("PRUNERANK_THRESHOLD"); threshold && *threshold) {
    cfg.pruning.threshold = parse_double(threshold, "PRUNERANK_THRESHOLD");
    check_threshold(cfg.pruning.threshold, "PRUNERANK_THRESHOLD");
  }

  // Layer 4: flags.
  if (overrides.listen_address) cfg.service.listen_address = *overrides.listen_address;
  if (overrides.backend) cfg.service.scorer.backend = scorer_backend_from_string(*overrides.backend);
  if (overrides.endpoint) cfg.service.scorer.endpoint = *overrides.endpoint;
  if (overrides.model_path) cfg.service.scorer.model_path = *overrides.model_path;
  if (overrides.batch_size) {
    if (*overrides.batch_size < 1) throw ConfigError("batch size must be at least 1");
    cfg.service.scorer.batch_size = *overrides.batch_size;
  }
  if (overrides.timeout_ms) cfg.service.scorer.timeout_ms = *overrides.timeout_ms;
  if (overrides.threshold) {
    check_threshold(*overrides.threshold, "--threshold");
    cfg.pruning.threshold = *overrides.threshold;
  }
  if (overrides.always_keep_first) cfg.pruning.always_keep_first = *overrides.always_keep_first;
  if (overrides.basis) cfg.pruning.basis = compression_basis_from_string(*overrides.basis);
  if (overrides.max_batch) {
    if (*overrides.max_batch < 1) throw ConfigError("max batch must be at least 1");
    cfg.service.max_batch = *overrides.max_batch;
  }

  cfg.service.default_threshold = cfg.pruning.threshold;
  return cfg;
}

AppConfig resolve_config(const std::optional<std::string>& config_path_flag,
                         const ConfigOverrides& overrides) {
  return resolve_config(config_path_flag, overrides,
                        [](const char* name) { return std::getenv(name); });
}

}  // namespace prunerank
