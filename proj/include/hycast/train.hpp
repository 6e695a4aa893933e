#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hycast/data.hpp"
#include "hycast/metrics.hpp"
#include "hycast/model.hpp"
#include "hycast/tensor.hpp"

namespace hycast {

// Mean squared error between same-shaped prediction and target tensors.
Tensor task_loss(const Tensor& predictions, const Tensor& targets);

// Weighted sum of per-task MSE terms: sum_t weights[t] * mse(pred_t, tgt_t).
Tensor multi_task_loss(const std::vector<Tensor>& predictions,
                       const std::vector<Tensor>& targets,
                       const std::vector<double>& weights);

// Adam with bias-corrected first and second moments. Parameters are updated
// in place from their accumulated gradients; call zero_grad() between steps.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<Tensor> params, double learning_rate = 1e-3,
                         double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);

  void step();
  void zero_grad();
  std::size_t steps_taken() const { return steps_; }
  double learning_rate() const { return learning_rate_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  double learning_rate_;
  double beta1_;
  double beta2_;
  double epsilon_;
  std::size_t steps_ = 0;
};

// ---- training loop ------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;           // epochs without val improvement
  std::vector<double> task_weights;    // empty: equal weights
  std::size_t folds = 5;               // cross-validation only
  std::uint64_t seed = 1;

  void validate(std::size_t task_count) const;  // ConfigError naming field
  // Positive weights scaled to sum to 1; equal when none are configured.
  std::vector<double> normalized_weights(std::size_t task_count) const;
};

struct EpochRecord {
  std::vector<double> train_task_loss;  // per task, window-weighted means
  std::vector<double> val_task_loss;
  double train_loss = 0.0;  // task-weighted
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool early_stopped = false;
};

// Mini-batch Adam training with early stopping on validation loss. The best
// epoch's parameters (and batch-norm statistics) are restored before
// returning. Throws TrainError when the loss leaves the reals, reporting the
// epoch and the last finite loss.
TrainLog fit(HybridModel& model, const WindowedDataset& train,
             const WindowedDataset& val, const TrainConfig& config);

// Per-task normalized predictions for every window, in infer mode.
std::vector<std::vector<double>> predict_all(HybridModel& model,
                                             const WindowedDataset& data);

// Per-task metrics on de-normalized values.
struct EvalResult {
  std::vector<TaskMetrics> tasks;
  double mean_r2 = 0.0;  // across tasks
};

EvalResult evaluate_dataset(
    HybridModel& model, const WindowedDataset& data, const Normalizer& norm,
    const std::vector<std::string>& task_channels,
    MapeZeroPolicy policy = MapeZeroPolicy::kExcludeWithCount);

// ---- rolling-origin cross-validation ----------------------------------------------

struct CrossValConfig {
  std::size_t window = 5;
  std::vector<std::string> input_channels = {"close"};
  std::vector<std::string> task_channels = {"close"};
  std::size_t folds = 5;
  // Trailing share of each fold's training windows reserved for early
  // stopping.
  double val_frac_within_train = 0.15;
};

struct FoldReport {
  std::size_t fold = 0;                // 1-based
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
  std::vector<TaskMetrics> tasks;      // de-normalized units
  double mean_r2 = 0.0;                // across tasks
};

struct CrossValReport {
  std::vector<FoldReport> folds;
  std::vector<TaskMetrics> mean_tasks;  // arithmetic mean of fold fields
  double average_test_r2 = 0.0;         // mean of fold mean_r2
};

// Produces de-normalized per-task predictions for one fold's test windows.
using FoldRunner = std::function<std::vector<std::vector<double>>(
    const WindowedDataset& train, const WindowedDataset& val,
    const WindowedDataset& test, const Normalizer& norm)>;

// Forward-chaining folds: the series' windows are cut into folds+1 segments;
// fold i trains on segments [0, i] (with a trailing validation slice) and
// tests on segment i+1. Nothing is shuffled, no fold tests on data earlier
// than its training span, and each fold refits its own normalizer.
CrossValReport cross_validate(const OhlcvSeries& series,
                              const CrossValConfig& cv,
                              const FoldRunner& runner,
                              MapeZeroPolicy policy =
                                  MapeZeroPolicy::kExcludeWithCount);

// The standard runner: builds a fresh model from `model_config` per fold,
// fits it with `train_config`, and predicts the test windows.
FoldRunner model_fold_runner(const ModelConfig& model_config,
                             const TrainConfig& train_config);

}  // namespace hycast
