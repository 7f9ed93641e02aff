#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prunerank/labeler.hpp"
#include "prunerank/scorer.hpp"

namespace prunerank {

// Feature space: character 3-grams of "query token" hashed into 2^16
// buckets. The hash version is stored with models so stale files are
// rejected when the featurization changes.
inline constexpr size_t kFeatureDim = size_t{1} << 16;
inline constexpr std::string_view kFeatureHashVersion = "fnv1a64/1";

uint64_t fnv1a64(std::string_view bytes);

// Sparse L2-normalized multi-hot vector, entries sorted by bucket.
struct FeatureVector {
  std::vector<std::pair<uint32_t, double>> entries;
  double dot(const std::vector<double>& dense) const;
};

FeatureVector token_features(std::string_view query, std::string_view token_text);

// Linear joint model: per-token keep probability sigmoid(w.phi + b) and a
// passage score u.mean_phi + c, trained against BCE plus lambda-weighted
// squared error to the teacher score.
struct ToyModel {
  size_t dim = kFeatureDim;
  std::string hash_version = std::string(kFeatureHashVersion);
  double lambda = 1.0;
  std::vector<double> w;
  double b = 0.0;
  std::vector<double> u;
  double c = 0.0;

  static ToyModel zeros(double lambda = 1.0);
};

struct TrainConfig {
  int epochs = 5;
  double learning_rate = 0.1;
  int batch_size = 64;
  double lambda = 1.0;
  uint64_t seed = 0;
};

// A TrainingExample with features and token targets materialized.
struct PreparedExample {
  std::vector<FeatureVector> token_phi;
  FeatureVector mean_phi;
  std::vector<int> token_targets;
  double teacher_score = 0.0;
};

// Tokenizes every sentence and hashes features. Throws EmptyExample when no
// sentence yields a token.
PreparedExample prepare_example(const TrainingExample& example);

struct ForwardResult {
  std::vector<double> token_probs;
  double score;
};

ForwardResult forward(const ToyModel& model, const PreparedExample& example);
ForwardResult forward(const ToyModel& model, const TrainingExample& example);

double loss(const ToyModel& model, const PreparedExample& example);
double loss(const ToyModel& model, const TrainingExample& example);

// Sparse gradient of the loss; only touched buckets appear.
struct Gradient {
  std::vector<std::pair<uint32_t, double>> w;
  double b = 0.0;
  std::vector<std::pair<uint32_t, double>> u;
  double c = 0.0;
};

Gradient gradient(const ToyModel& model, const PreparedExample& example);

// Compares analytic and central-difference derivatives on n_coords randomly
// chosen active coordinates; returns the worst relative error.
double finite_diff_check(const ToyModel& model, const PreparedExample& example, double h,
                         int n_coords, uint64_t seed);

struct TrainResult {
  ToyModel model;
  std::vector<double> epoch_mean_loss;  // one entry per epoch, full-dataset mean
};

// Seeded mini-batch SGD from a zero model. Examples that produce no tokens
// are skipped; an effectively empty dataset raises EmptyDataset.
TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& config);

// Fraction of tokens whose thresholded probability matches the target.
double token_accuracy(const ToyModel& model, const std::vector<TrainingExample>& dataset,
                      double cutoff = 0.5);

// Mean squared error of the passage score against teacher scores.
double rank_mse(const ToyModel& model, const std::vector<TrainingExample>& dataset);

// JSON model file with sparse weights; save-load-save is byte identical.
void save_model(const ToyModel& model, const std::string& path);
ToyModel load_model(const std::string& path);

// Scorer backed by a trained model. Token values are clipped to
// [1e-4, 1 - 1e-4] so downstream code can rely on the open interval.
class ToyModelScorer final : public Scorer {
 public:
  explicit ToyModelScorer(ToyModel model);
  explicit ToyModelScorer(const std::string& path);
  ScoredPassage score(std::string_view query, const SegmentedPassage& passage) override;
  std::string info() const override;

 private:
  ToyModel model_;
  std::string origin_;
};

}  // namespace prunerank
