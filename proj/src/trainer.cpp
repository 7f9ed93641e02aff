#include "prunerank/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "prunerank/errors.hpp"
#include "prunerank/unicode.hpp"

namespace prunerank {

namespace {

using ojson = nlohmann::ordered_json;

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

constexpr double kProbClip = 1e-7;  // keeps log() finite in the BCE term

double bce(double p, int y) {
  const double q = std::min(1.0 - kProbClip, std::max(kProbClip, p));
  return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

}  // namespace

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

double FeatureVector::dot(const std::vector<double>& dense) const {
  double sum = 0.0;
  for (const auto& [bucket, value] : entries) {
    sum += value * dense[bucket];
  }
  return sum;
}

FeatureVector token_features(std::string_view query, std::string_view token_text) {
  std::string joined;
  joined.reserve(query.size() + 1 + token_text.size());
  joined.append(query);
  joined.push_back(' ');
  joined.append(token_text);

  const auto grams = uni::char3gram_set(uni::fold_case(uni::decode_utf8(joined)));
  std::set<uint32_t> buckets;  // ordered so entries come out sorted
  for (const std::string& g : grams) {
    buckets.insert(static_cast<uint32_t>(fnv1a64(g) & (kFeatureDim - 1)));
  }

  FeatureVector out;
  if (buckets.empty()) return out;
  const double value = 1.0 / std::sqrt(static_cast<double>(buckets.size()));
  out.entries.reserve(buckets.size());
  for (uint32_t b : buckets) out.entries.emplace_back(b, value);
  return out;
}

ToyModel ToyModel::zeros(double lambda) {
  ToyModel m;
  m.lambda = lambda;
  m.w.assign(kFeatureDim, 0.0);
  m.u.assign(kFeatureDim, 0.0);
  return m;
}

PreparedExample prepare_example(const TrainingExample& example) {
  if (example.sentences.size() != example.sentence_labels.size()) {
    throw Error("example has " + std::to_string(example.sentences.size()) + " sentences but " +
                std::to_string(example.sentence_labels.size()) + " labels");
  }
  PreparedExample out;
  out.teacher_score = example.teacher_score;
  for (size_t s = 0; s < example.sentences.size(); ++s) {
    for (const TokenSpan& t : tokenize_for_scoring(example.sentences[s])) {
      const std::string text = uni::cp_slice(example.sentences[s], t.start, t.end);
      out.token_phi.push_back(token_features(example.query, text));
      out.token_targets.push_back(example.sentence_labels[s]);
    }
  }
  if (out.token_phi.empty()) {
    throw EmptyExample("example yields no tokens");
  }

  std::map<uint32_t, double> mean;
  for (const FeatureVector& phi : out.token_phi) {
    for (const auto& [bucket, value] : phi.entries) mean[bucket] += value;
  }
  const double inv = 1.0 / static_cast<double>(out.token_phi.size());
  out.mean_phi.entries.reserve(mean.size());
  for (const auto& [bucket, value] : mean) {
    out.mean_phi.entries.emplace_back(bucket, value * inv);
  }
  return out;
}

ForwardResult forward(const ToyModel& model, const PreparedExample& example) {
  if (example.token_phi.empty()) throw EmptyExample("example yields no tokens");
  ForwardResult out;
  out.token_probs.reserve(example.token_phi.size());
  for (const FeatureVector& phi : example.token_phi) {
    out.token_probs.push_back(sigmoid(phi.dot(model.w) + model.b));
  }
  out.score = example.mean_phi.dot(model.u) + model.c;
  return out;
}

ForwardResult forward(const ToyModel& model, const TrainingExample& example) {
  return forward(model, prepare_example(example));
}

double loss(const ToyModel& model, const PreparedExample& example) {
  const ForwardResult f = forward(model, example);
  double token_loss = 0.0;
  for (size_t t = 0; t < f.token_probs.size(); ++t) {
    token_loss += bce(f.token_probs[t], example.token_targets[t]);
  }
  token_loss /= static_cast<double>(f.token_probs.size());
  const double resid = f.score - example.teacher_score;
  return token_loss + model.lambda * resid * resid;
}

double loss(const ToyModel& model, const TrainingExample& example) {
  return loss(model, prepare_example(example));
}

Gradient gradient(const ToyModel& model, const PreparedExample& example) {
  const ForwardResult f = forward(model, example);
  const double inv_t = 1.0 / static_cast<double>(f.token_probs.size());

  Gradient g;
  std::map<uint32_t, double> gw;
  double gb = 0.0;
  for (size_t t = 0; t < f.token_probs.size(); ++t) {
    const double delta = (f.token_probs[t] - example.token_targets[t]) * inv_t;
    gb += delta;
    for (const auto& [bucket, value] : example.token_phi[t].entries) {
      gw[bucket] += delta * value;
    }
  }
  g.b = gb;
  g.w.assign(gw.begin(), gw.end());

  const double dscore = 2.0 * model.lambda * (f.score - example.teacher_score);
  g.c = dscore;
  g.u.reserve(example.mean_phi.entries.size());
  for (const auto& [bucket, value] : example.mean_phi.entries) {
    g.u.emplace_back(bucket, dscore * value);
  }
  return g;
}

double finite_diff_check(const ToyModel& model, const PreparedExample& example, double h,
                         int n_coords, uint64_t seed) {
  if (n_coords <= 0) return 0.0;
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");

  // Coordinate pool: every active w and u bucket plus the two biases.
  enum class Kind { w, u, b, c };
  std::vector<std::pair<Kind, uint32_t>> pool;
  std::set<uint32_t> w_active;
  for (const FeatureVector& phi : example.token_phi) {
    for (const auto& [bucket, value] : phi.entries) w_active.insert(bucket);
  }
  for (uint32_t bucket : w_active) pool.emplace_back(Kind::w, bucket);
  for (const auto& [bucket, value] : example.mean_phi.entries) pool.emplace_back(Kind::u, bucket);
  pool.emplace_back(Kind::b, 0);
  pool.emplace_back(Kind::c, 0);

  const Gradient g = gradient(model, example);
  std::map<uint32_t, double> gw(g.w.begin(), g.w.end());
  std::map<uint32_t, double> gu(g.u.begin(), g.u.end());

  ToyModel probe = model;
  auto coord = [&probe](Kind kind, uint32_t bucket) -> double& {
    switch (kind) {
      case Kind::w: return probe.w[bucket];
      case Kind::u: return probe.u[bucket];
      case Kind::b: return probe.b;
      default: return probe.c;
    }
  };

  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < n_coords; ++i) {
    const auto [kind, bucket] = pool[rng() % pool.size()];
    double& x = coord(kind, bucket);
    const double saved = x;
    x = saved + h;
    const double up = loss(probe, example);
    x = saved - h;
    const double down = loss(probe, example);
    x = saved;

    const double numeric = (up - down) / (2.0 * h);
    double analytic = 0.0;
    switch (kind) {
      case Kind::w: analytic = gw.count(bucket) ? gw[bucket] : 0.0; break;
      case Kind::u: analytic = gu.count(bucket) ? gu[bucket] : 0.0; break;
      case Kind::b: analytic = g.b; break;
      case Kind::c: analytic = g.c; break;
    }
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    worst = std::max(worst, std::fabs(analytic - numeric) / denom);
  }
  return worst;
}

TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& config) {
  if (dataset.empty()) throw EmptyDataset("training dataset is empty");
  if (config.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (!(config.learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (config.batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (!(config.lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");

  std::vector<PreparedExample> prepared;
  prepared.reserve(dataset.size());
  for (const TrainingExample& ex : dataset) {
    try {
      prepared.push_back(prepare_example(ex));
    } catch (const EmptyExample&) {
      // tokenless examples carry no signal
    }
  }
  if (prepared.empty()) throw EmptyDataset("no example in the dataset yields tokens");

  TrainResult result;
  result.model = ToyModel::zeros(config.lambda);
  ToyModel& m = result.model;

  std::mt19937_64 rng(config.seed);
  std::vector<size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (size_t i = order.size() - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(rng() % (i + 1));
      std::swap(order[i], order[j]);
    }
    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(), begin + static_cast<size_t>(config.batch_size));
      std::map<uint32_t, double> gw, gu;
      double gb = 0.0, gc = 0.0;
      for (size_t k = begin; k < end; ++k) {
        const Gradient g = gradient(m, prepared[order[k]]);
        for (const auto& [bucket, value] : g.w) gw[bucket] += value;
        for (const auto& [bucket, value] : g.u) gu[bucket] += value;
        gb += g.b;
        gc += g.c;
      }
      const double step = config.learning_rate / static_cast<double>(end - begin);
      for (const auto& [bucket, value] : gw) m.w[bucket] -= step * value;
      for (const auto& [bucket, value] : gu) m.u[bucket] -= step * value;
      m.b -= step * gb;
      m.c -= step * gc;
    }
    double total = 0.0;
    for (const PreparedExample& ex : prepared) total += loss(m, ex);
    result.epoch_mean_loss.push_back(total / static_cast<double>(prepared.size()));
  }
  return result;
}

double token_accuracy(const ToyModel& model, const std::vector<TrainingExample>& dataset,
                      double cutoff) {
  size_t hits = 0, total = 0;
  for (const TrainingExample& ex : dataset) {
    PreparedExample prepared;
    try {
      prepared = prepare_example(ex);
    } catch (const EmptyExample&) {
      continue;
    }
    const ForwardResult f = forward(model, prepared);
    for (size_t t = 0; t < f.token_probs.size(); ++t) {
      const int predicted = f.token_probs[t] >= cutoff ? 1 : 0;
      hits += predicted == prepared.token_targets[t] ? 1 : 0;
      ++total;
    }
  }
  if (total == 0) throw EmptyDataset("no tokens to evaluate");
  return static_cast<double>(hits) / static_cast<double>(total);
}

double rank_mse(const ToyModel& model, const std::vector<TrainingExample>& dataset) {
  double sum = 0.0;
  size_t n = 0;
  for (const TrainingExample& ex : dataset) {
    PreparedExample prepared;
    try {
      prepared = prepare_example(ex);
    } catch (const EmptyExample&) {
      continue;
    }
    const double resid = forward(model, prepared).score - prepared.teacher_score;
    sum += resid * resid;
    ++n;
  }
  if (n == 0) throw EmptyDataset("no examples to evaluate");
  return sum / static_cast<double>(n);
}

void save_model(const ToyModel& model, const std::string& path) {
  ojson j;
  j["dim"] = model.dim;
  j["hash_version"] = model.hash_version;
  j["lambda"] = model.lambda;
  j["b"] = model.b;
  j["c"] = model.c;
  auto sparse = [](const std::vector<double>& dense) {
    ojson idx = ojson::array();
    ojson val = ojson::array();
    for (size_t i = 0; i < dense.size(); ++i) {
      if (dense[i] != 0.0) {
        idx.push_back(i);
        val.push_back(dense[i]);
      }
    }
    ojson part;
    part["idx"] = std::move(idx);
    part["val"] = std::move(val);
    return part;
  };
  j["w"] = sparse(model.w);
  j["u"] = sparse(model.u);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump() << '\n';
  if (!out) throw Error("failed writing: " + path);
}

ToyModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelLoadError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();

  ojson j;
  try {
    j = ojson::parse(buf.str());
  } catch (const ojson::exception& e) {
    throw ModelLoadError("model file is not JSON: " + std::string(e.what()));
  }
  try {
    ToyModel m;
    m.dim = j.at("dim").get<size_t>();
    m.hash_version = j.at("hash_version").get<std::string>();
    if (m.dim != kFeatureDim) {
      throw ModelLoadError("model dimension " + std::to_string(m.dim) + " does not match " +
                           std::to_string(kFeatureDim));
    }
    if (m.hash_version != kFeatureHashVersion) {
      throw ModelLoadError("model hash version '" + m.hash_version + "' does not match '" +
                           std::string(kFeatureHashVersion) + "'");
    }
    m.lambda = j.at("lambda").get<double>();
    m.b = j.at("b").get<double>();
    m.c = j.at("c").get<double>();
    m.w.assign(kFeatureDim, 0.0);
    m.u.assign(kFeatureDim, 0.0);
    auto fill = [&](const ojson& part, std::vector<double>& dense) {
      const auto idx = part.at("idx").get<std::vector<size_t>>();
      const auto val = part.at("val").get<std::vector<double>>();
      if (idx.size() != val.size()) throw ModelLoadError("model idx/val arrays differ in length");
      for (size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= kFeatureDim) {
          throw ModelLoadError("model index out of range: " + std::to_string(idx[k]));
        }
        dense[idx[k]] = val[k];
      }
    };
    fill(j.at("w"), m.w);
    fill(j.at("u"), m.u);
    return m;
  } catch (const ojson::exception& e) {
    throw ModelLoadError("model file is missing fields: " + std::string(e.what()));
  }
}

ToyModelScorer::ToyModelScorer(ToyModel model) : model_(std::move(model)), origin_("in-memory") {}

ToyModelScorer::ToyModelScorer(const std::string& path) : model_(load_model(path)), origin_(path) {}

ScoredPassage ToyModelScorer::score(std::string_view query, const SegmentedPassage& passage) {
  if (query.empty()) throw std::invalid_argument("query is empty");
  ScoredPassage out;
  out.tokens = tokenize_for_scoring(passage.text);
  out.token_values.reserve(out.tokens.size());
  if (out.tokens.empty()) return out;

  FeatureVector mean;
  std::map<uint32_t, double> acc;
  for (const TokenSpan& t : out.tokens) {
    const std::string text = uni::cp_slice(passage.text, t.start, t.end);
    const FeatureVector phi = token_features(query, text);
    const double p = sigmoid(phi.dot(model_.w) + model_.b);
    out.token_values.push_back(std::min(1.0 - 1e-4, std::max(1e-4, p)));
    for (const auto& [bucket, value] : phi.entries) acc[bucket] += value;
  }
  const double inv = 1.0 / static_cast<double>(out.tokens.size());
  for (const auto& [bucket, value] : acc) mean.entries.emplace_back(bucket, value * inv);
  out.passage_score = mean.dot(model_.u) + model_.c;
  return out;
}

std::string ToyModelScorer::info() const {
  return "toy-model " + std::string(kFeatureHashVersion) + " " + origin_;
}

}  // namespace prunerank
