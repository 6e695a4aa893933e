#include "hycast/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "hycast/error.hpp"
#include "hycast/ops.hpp"
#include "hycast/tape.hpp"

namespace hycast {

Tensor task_loss(const Tensor& predictions, const Tensor& targets) {
  if (predictions.shape() != targets.shape()) {
    throw DimensionError("loss: prediction shape " +
                         shape_to_string(predictions.shape()) +
                         " does not match target shape " +
                         shape_to_string(targets.shape()));
  }
  Tensor diff = sub(predictions, targets);
  return mean(mul(diff, diff));
}

Tensor multi_task_loss(const std::vector<Tensor>& predictions,
                       const std::vector<Tensor>& targets,
                       const std::vector<double>& weights) {
  if (predictions.empty() || predictions.size() != targets.size() ||
      predictions.size() != weights.size()) {
    throw ContractError("loss: need matching nonempty prediction/target/weight "
                        "lists");
  }
  Tensor total;
  for (std::size_t t = 0; t < predictions.size(); ++t) {
    if (weights[t] <= 0.0) {
      throw ContractError("loss: task weights must be positive");
    }
    Tensor term = mul_scalar(task_loss(predictions[t], targets[t]), weights[t]);
    total = t == 0 ? term : add(total, term);
  }
  return total;
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double learning_rate,
                             double beta1, double beta2, double epsilon)
    : params_(std::move(params)), learning_rate_(learning_rate), beta1_(beta1),
      beta2_(beta2), epsilon_(epsilon) {
  if (learning_rate <= 0.0) {
    throw ContractError("adam: learning rate must be positive");
  }
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ContractError("adam: betas must lie in [0, 1)");
  }
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void AdamOptimizer::step() {
  ++steps_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& impl = *params_[i].impl();
    auto& data = params_[i].mutable_values();
    const bool has_grad = !impl.grad.empty();
    for (std::size_t j = 0; j < data.size(); ++j) {
      double g = has_grad ? impl.grad[j] : 0.0;
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
      double m_hat = m_[i][j] / bc1;
      double v_hat = v_[i][j] / bc2;
      data[j] -= learning_rate_ * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
  }
}

void AdamOptimizer::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

// ---- training loop ------------------------------------------------------------

void TrainConfig::validate(std::size_t task_count) const {
  if (learning_rate <= 0.0) {
    throw ConfigError("train config: learning_rate must be positive");
  }
  if (beta1 < 0.0 || beta1 >= 1.0) {
    throw ConfigError("train config: beta1 must lie in [0, 1)");
  }
  if (beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("train config: beta2 must lie in [0, 1)");
  }
  if (epsilon <= 0.0) {
    throw ConfigError("train config: epsilon must be positive");
  }
  if (batch_size == 0) {
    throw ConfigError("train config: batch_size must be at least 1");
  }
  if (max_epochs == 0) {
    throw ConfigError("train config: max_epochs must be at least 1");
  }
  if (!task_weights.empty()) {
    if (task_weights.size() != task_count) {
      throw ConfigError("train config: task_weights must be empty or give one "
                        "weight per task (got " +
                        std::to_string(task_weights.size()) + " for " +
                        std::to_string(task_count) + " tasks)");
    }
    for (double w : task_weights) {
      if (!(w > 0.0)) {
        throw ConfigError("train config: task_weights must all be positive");
      }
    }
  }
  if (folds < 2) {
    throw ConfigError("train config: folds must be at least 2 for "
                      "cross-validation");
  }
}

std::vector<double> TrainConfig::normalized_weights(
    std::size_t task_count) const {
  if (task_count == 0) {
    throw ContractError("train config: need at least one task");
  }
  if (task_weights.empty()) {
    return std::vector<double>(task_count,
                               1.0 / static_cast<double>(task_count));
  }
  validate(task_count);
  double total = 0.0;
  for (double w : task_weights) total += w;
  std::vector<double> out = task_weights;
  for (double& w : out) w /= total;
  return out;
}

namespace {

// Contiguous [start, stop) batches in chronological order. A trailing batch
// of a single window is folded into its predecessor so batch statistics are
// never computed from one sample.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(
    std::size_t count, std::size_t batch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t start = 0; start < count; start += batch_size) {
    ranges.emplace_back(start, std::min(start + batch_size, count));
  }
  if (ranges.size() > 1 && ranges.back().second - ranges.back().first == 1) {
    ranges[ranges.size() - 2].second = ranges.back().second;
    ranges.pop_back();
  }
  return ranges;
}

void check_dataset(const WindowedDataset& data, std::size_t task_count,
                   const char* which) {
  if (data.count() == 0) {
    throw ContractError(std::string("fit: ") + which + " set is empty");
  }
  if (data.targets.size() != task_count) {
    throw ContractError(std::string("fit: ") + which + " set has " +
                        std::to_string(data.targets.size()) +
                        " target tasks, model expects " +
                        std::to_string(task_count));
  }
}

std::string format_loss(double v) {
  std::ostringstream out;
  out.precision(12);
  out << v;
  return out.str();
}

[[noreturn]] void throw_divergence(std::size_t epoch, bool any_finite,
                                   double last_finite, const char* where) {
  Tape::active().reset();  // drop the half-recorded graph
  std::string tail = any_finite
                         ? "last finite loss " + format_loss(last_finite)
                         : std::string("no finite loss was recorded");
  throw TrainError("training diverged at epoch " + std::to_string(epoch) +
                   ": " + where + " loss is not finite (" + tail + ")");
}

// Per-task validation losses in infer mode, no graph.
std::vector<double> dataset_task_losses(HybridModel& model,
                                        const WindowedDataset& data) {
  NoGradGuard guard;
  std::vector<Tensor> preds = model.forward(data.inputs, Mode::kInfer);
  std::vector<double> losses(preds.size());
  for (std::size_t t = 0; t < preds.size(); ++t) {
    losses[t] = task_loss(preds[t], data.targets[t]).scalar_value();
  }
  return losses;
}

}  // namespace

TrainLog fit(HybridModel& model, const WindowedDataset& train,
             const WindowedDataset& val, const TrainConfig& config) {
  const std::size_t task_count = model.config().tasks.size();
  config.validate(task_count);
  check_dataset(train, task_count, "train");
  check_dataset(val, task_count, "validation");
  const std::vector<double> weights = config.normalized_weights(task_count);

  ParamList named = model.parameters();
  std::vector<Tensor> tensors;
  tensors.reserve(named.size());
  for (auto& p : named) tensors.push_back(p.tensor);
  AdamOptimizer optimizer(tensors, config.learning_rate, config.beta1,
                          config.beta2, config.epsilon);

  // Snapshots cover the batch-norm running statistics too: restoring the
  // best epoch must reproduce its validation forward pass exactly.
  ParamList state = model.checkpoint_state();
  std::vector<std::vector<double>> best_state;
  auto snapshot = [&] {
    best_state.clear();
    best_state.reserve(state.size());
    for (const auto& p : state) best_state.push_back(p.tensor.values());
  };

  const auto ranges = batch_ranges(train.count(), config.batch_size);
  TrainLog log;
  log.best_val_loss = std::numeric_limits<double>::infinity();
  double last_finite = 0.0;
  bool any_finite = false;
  std::size_t epochs_without_improvement = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    std::vector<double> train_sums(task_count, 0.0);

    for (const auto& [start, stop] : ranges) {
      const std::size_t span = stop - start;
      Tensor batch = slice(train.inputs, 0, start, span);
      std::vector<Tensor> preds = model.forward(batch, Mode::kTrain);

      Tensor total;
      std::vector<double> task_values(task_count);
      for (std::size_t t = 0; t < task_count; ++t) {
        Tensor part = task_loss(preds[t], slice(train.targets[t], 0, start, span));
        task_values[t] = part.scalar_value();
        Tensor weighted = mul_scalar(part, weights[t]);
        total = t == 0 ? weighted : add(total, weighted);
      }
      double total_value = total.scalar_value();
      if (!std::isfinite(total_value)) {
        throw_divergence(epoch, any_finite, last_finite, "batch");
      }
      last_finite = total_value;
      any_finite = true;

      backward(total);
      optimizer.step();
      optimizer.zero_grad();

      for (std::size_t t = 0; t < task_count; ++t) {
        train_sums[t] += task_values[t] * static_cast<double>(span);
      }
    }

    EpochRecord record;
    record.train_task_loss.resize(task_count);
    for (std::size_t t = 0; t < task_count; ++t) {
      record.train_task_loss[t] =
          train_sums[t] / static_cast<double>(train.count());
      record.train_loss += weights[t] * record.train_task_loss[t];
    }

    record.val_task_loss = dataset_task_losses(model, val);
    for (std::size_t t = 0; t < task_count; ++t) {
      record.val_loss += weights[t] * record.val_task_loss[t];
    }
    if (!std::isfinite(record.val_loss)) {
      throw_divergence(epoch, any_finite, last_finite, "validation");
    }

    record.seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - epoch_start)
                         .count();
    log.epochs.push_back(record);

    if (record.val_loss < log.best_val_loss) {
      log.best_val_loss = record.val_loss;
      log.best_epoch = epoch;
      epochs_without_improvement = 0;
      snapshot();
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement > config.patience) {
        log.early_stopped = true;
        break;
      }
    }
  }

  if (!best_state.empty()) {
    for (std::size_t i = 0; i < state.size(); ++i) {
      state[i].tensor.mutable_values() = best_state[i];
    }
  }
  return log;
}

std::vector<std::vector<double>> predict_all(HybridModel& model,
                                             const WindowedDataset& data) {
  NoGradGuard guard;
  std::vector<Tensor> preds = model.forward(data.inputs, Mode::kInfer);
  std::vector<std::vector<double>> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back(p.values());
  return out;
}

EvalResult evaluate_dataset(HybridModel& model, const WindowedDataset& data,
                            const Normalizer& norm,
                            const std::vector<std::string>& task_channels,
                            MapeZeroPolicy policy) {
  if (task_channels.size() != data.targets.size()) {
    throw ContractError("evaluate: " + std::to_string(task_channels.size()) +
                        " task channels for " +
                        std::to_string(data.targets.size()) + " targets");
  }
  std::vector<std::vector<double>> preds = predict_all(model, data);
  EvalResult result;
  for (std::size_t t = 0; t < task_channels.size(); ++t) {
    const std::string& channel = task_channels[t];
    std::vector<double> actual = data.targets[t].values();
    std::vector<double> predicted = preds[t];
    for (double& v : actual) v = norm.inverse(channel, v);
    for (double& v : predicted) v = norm.inverse(channel, v);
    result.tasks.push_back(evaluate_task(channel, actual, predicted, policy));
    result.mean_r2 += result.tasks.back().r2;
  }
  result.mean_r2 /= static_cast<double>(result.tasks.size());
  return result;
}

// ---- rolling-origin cross-validation ----------------------------------------------

CrossValReport cross_validate(const OhlcvSeries& series,
                              const CrossValConfig& cv, const FoldRunner& runner,
                              MapeZeroPolicy policy) {
  if (cv.folds < 2) {
    throw ConfigError("cross-validation: folds must be at least 2");
  }
  if (cv.window == 0) {
    throw ConfigError("cross-validation: window must be at least 1");
  }
  if (cv.input_channels.empty() || cv.task_channels.empty()) {
    throw ConfigError("cross-validation: need input and task channels");
  }
  if (!(cv.val_frac_within_train > 0.0 && cv.val_frac_within_train < 1.0)) {
    throw ConfigError("cross-validation: val_frac_within_train must lie in "
                      "(0, 1)");
  }
  if (series.size() <= cv.window) {
    throw ContractError("cross-validation: series of " +
                        std::to_string(series.size()) +
                        " rows yields no windows of length " +
                        std::to_string(cv.window));
  }

  // Cut the window indices into folds+1 chronological segments; fold i
  // trains on segments [0, i] and tests on segment i+1, so every fold's test
  // span lies strictly after everything it trained on.
  const std::size_t n = series.size() - cv.window;
  const std::size_t segments = cv.folds + 1;
  std::vector<std::size_t> bounds(segments + 1);
  for (std::size_t i = 0; i <= segments; ++i) {
    bounds[i] = i * n / segments;
  }

  CrossValReport report;
  const std::size_t task_count = cv.task_channels.size();
  std::vector<TaskMetrics> sums(task_count);

  for (std::size_t f = 1; f <= cv.folds; ++f) {
    const std::size_t train_end = bounds[f];
    const std::size_t test_end = bounds[f + 1];
    const std::size_t test_count = test_end - train_end;
    std::size_t val_count = static_cast<std::size_t>(
        cv.val_frac_within_train * static_cast<double>(train_end));
    val_count = std::max<std::size_t>(val_count, 1);
    if (train_end < val_count + 2 || test_count == 0) {
      throw ContractError("cross-validation: fold " + std::to_string(f) +
                          " has too little data (" +
                          std::to_string(train_end) + " train windows, " +
                          std::to_string(test_count) + " test windows)");
    }
    const std::size_t fit_count = train_end - val_count;

    // The scaler sees only rows touched by this fold's gradient windows.
    Normalizer norm = Normalizer::fit(series, fit_count + cv.window);
    WindowedDataset train_set =
        build_windows(series, norm, cv.window, cv.input_channels,
                      cv.task_channels, 0, fit_count);
    WindowedDataset val_set =
        build_windows(series, norm, cv.window, cv.input_channels,
                      cv.task_channels, fit_count, val_count);
    WindowedDataset test_set =
        build_windows(series, norm, cv.window, cv.input_channels,
                      cv.task_channels, train_end, test_count);

    std::vector<std::vector<double>> preds =
        runner(train_set, val_set, test_set, norm);
    if (preds.size() != task_count) {
      throw ContractError("cross-validation: fold runner returned " +
                          std::to_string(preds.size()) + " tasks, expected " +
                          std::to_string(task_count));
    }

    FoldReport fold;
    fold.fold = f;
    fold.train_windows = train_end;
    fold.test_windows = test_count;
    for (std::size_t t = 0; t < task_count; ++t) {
      // Actuals come straight from the raw series, no scaler round trip.
      const auto& channel = series.channel(cv.task_channels[t]);
      std::vector<double> actual(test_count);
      for (std::size_t w = 0; w < test_count; ++w) {
        actual[w] = channel[train_end + w + cv.window];
      }
      fold.tasks.push_back(
          evaluate_task(cv.task_channels[t], actual, preds[t], policy));
      fold.mean_r2 += fold.tasks.back().r2;
    }
    fold.mean_r2 /= static_cast<double>(task_count);
    report.average_test_r2 += fold.mean_r2;

    for (std::size_t t = 0; t < task_count; ++t) {
      sums[t].task = fold.tasks[t].task;
      sums[t].mae += fold.tasks[t].mae;
      sums[t].rmse += fold.tasks[t].rmse;
      sums[t].mape += fold.tasks[t].mape;
      sums[t].r2 += fold.tasks[t].r2;
      sums[t].mape_excluded += fold.tasks[t].mape_excluded;  // total count
      sums[t].n += fold.tasks[t].n;                          // total count
    }
    report.folds.push_back(std::move(fold));
  }

  const double k = static_cast<double>(cv.folds);
  for (auto& s : sums) {
    s.mae /= k;
    s.rmse /= k;
    s.mape /= k;
    s.r2 /= k;
  }
  report.mean_tasks = std::move(sums);
  report.average_test_r2 /= k;
  return report;
}

FoldRunner model_fold_runner(const ModelConfig& model_config,
                             const TrainConfig& train_config) {
  return [model_config, train_config](
             const WindowedDataset& train, const WindowedDataset& val,
             const WindowedDataset& test,
             const Normalizer& norm) -> std::vector<std::vector<double>> {
    HybridModel model(model_config);
    fit(model, train, val, train_config);
    std::vector<std::vector<double>> preds = predict_all(model, test);
    for (std::size_t t = 0; t < preds.size(); ++t) {
      for (double& v : preds[t]) {
        v = norm.inverse(model_config.tasks[t], v);
      }
    }
    return preds;
  };
}

}  // namespace hycast
