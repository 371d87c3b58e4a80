#pragma once

#include "homnet/datasets.hpp"
#include "homnet/dhn.hpp"

#include <memory>

namespace homnet {

// How a query transforms the embedding of one pattern value.
enum class TransformKind { Trainable, Identity, Ones };

struct QuerySpec {
  PointedDatabase pattern;
  MatchMode mode = MatchMode::Hom;
  Aggregation agg = Aggregation::Sum;
  // Per pattern value id; empty means every value is trainable. A query mixing
  // kinds may not combine Trainable with Identity or Ones.
  std::vector<TransformKind> kinds;
};

struct ModelConfig {
  std::string name;
  std::vector<QuerySpec> queries;     // used by every layer
  std::vector<QuerySpec> last_extra;  // added to the last layer (readouts)
  int layers = 3;
  int dim = 32;               // trainable transform and combine output width
  int transform_hidden = 32;  // one hidden layer
  int combine_hidden = 32;
  int combine_hidden_layers = 3;
  int head_hidden = 32;
  double leaky_slope = 0.01;
  bool layer_norm = true;  // between layers, not after the last
  double layer_norm_eps = 1e-5;
  double lr = 3e-4;
  int epochs = 1000;
  AdamConfig adam;

  nlohmann::json to_json() const;
};

ModelConfig dhn_model(const std::string& name, const std::vector<PointedDatabase>& patterns, MatchMode mode,
                      Aggregation agg);
// Message passing over the single-edge pattern with a sum readout in the last layer;
// trained with the baseline schedule (lr 1e-3, 10000 epochs).
ModelConfig gin_model(const std::string& name = "GIN");

struct Metrics {
  double f1 = 0;
  double auroc = 0;
  bool auroc_defined = false;  // false when only one class is present
};

// F1 of (score > threshold) and rank AUROC with averaged ties.
Metrics compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels, double threshold = 0.0);
double f1_score(const std::vector<double>& scores, const std::vector<int>& labels, double threshold = 0.0);
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

// Match lists of a pattern in a target, grouped by the image of the root.
struct MatchIndex {
  int size = 0;      // pattern values per match
  int root = 0;      // pattern id of the root
  std::vector<std::size_t> offset;  // per target value, into matches / size
  std::vector<int> values;          // flattened matches
  bool readout = false;             // root plus one isolated value: evaluated in closed form

  std::size_t count(int r) const { return offset[r + 1] - offset[r]; }
  static MatchIndex build(const PointedDatabase& pattern, const Database& target, MatchMode mode);
};

// Trainable DHN over a fixed database; full-batch forward and backward.
class Trainer {
 public:
  Trainer(const ModelConfig& cfg, const Database& db, std::uint64_t seed);
  ~Trainer();
  Trainer(Trainer&&) noexcept;

  // Logits for every value.
  std::vector<double> forward();
  // One Adam step on the mean loss over the given values; returns that loss
  // (computed before the step). logits, if given, receives that forward pass.
  double step(const std::vector<int>& values, const std::vector<int>& labels, std::vector<double>* logits = nullptr);
  // Loss and parameter gradients without updating (for checks).
  double loss_and_gradient(const std::vector<int>& values, const std::vector<int>& labels);
  std::vector<std::pair<double*, double*>> parameters();  // (value, gradient) pairs, flattened
  std::size_t num_parameters() const;

  // The trained model as a network with zero-dimensional input: first-layer
  // transforms become constants.
  Dhn<double> export_dhn() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<double> loss;    // per epoch, before the step
  std::vector<double> val_f1;  // per epoch, same forward pass
  Metrics val, test;
  double seconds = 0;
  std::shared_ptr<Dhn<double>> model;

  nlohmann::json to_json() const;
};

RunResult train_run(const ModelConfig& cfg, const LabeledDataset& data, const Split& split, std::uint64_t seed,
                    bool keep_model = false, int log_every = 0);

struct ModelReport {
  std::string model;
  std::vector<RunResult> runs;
  std::size_t selected = 0;  // highest validation F1
  double val_f1_mean = 0, val_f1_se = 0, val_auroc_mean = 0, val_auroc_se = 0;
  double test_f1_mean = 0, test_f1_se = 0, test_auroc_mean = 0, test_auroc_se = 0;

  const RunResult& best() const { return runs[selected]; }
};

struct ExperimentReport {
  std::string name;
  nlohmann::json config;
  std::vector<ModelReport> models;

  nlohmann::json to_json() const;
  static ExperimentReport from_json(const nlohmann::json& j);
  std::string table() const;
};

struct ExperimentConfig {
  std::string name;  // "lt" or "sun"
  std::uint64_t seed = 0;
  int runs = 3;
  std::vector<ModelConfig> models;  // empty: the defaults for the experiment
  std::optional<int> epochs;        // overrides every model's epoch count
  int log_every = 0;                // progress lines to stderr
  bool keep_models = false;         // export every run's network
};

std::vector<ModelConfig> default_models(const std::string& experiment);
LabeledDataset experiment_dataset(const std::string& experiment, std::uint64_t seed);
// Runs execute on up to hardware_concurrency threads; each has its own seed.
ModelReport train_model(const ModelConfig& cfg, const LabeledDataset& data, const Split& split, std::uint64_t seed,
                        int runs, bool keep_models = false, int log_every = 0);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

}  // namespace homnet
