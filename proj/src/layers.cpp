#include "hycast/layers.hpp"

#include <cmath>

#include "hycast/error.hpp"
#include "hycast/ops.hpp"

namespace hycast {

namespace {

void require_trailing(const Tensor& x, std::size_t want, const char* layer) {
  if (x.rank() < 2 || x.extent(x.rank() - 1) != want) {
    throw DimensionError(std::string(layer) + ": expected trailing extent " +
                         std::to_string(want) + ", got shape " +
                         shape_to_string(x.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// DenseLayer
// ---------------------------------------------------------------------------

DenseLayer::DenseLayer(std::size_t in, std::size_t out, std::mt19937_64& rng)
    : in_(in), out_(out), weight_(Tensor::glorot({in, out}, in, out, rng)),
      bias_(Tensor::zeros({out})) {
  if (in == 0 || out == 0) {
    throw ContractError("dense layer widths must be positive");
  }
  weight_.set_requires_grad(true);
  bias_.set_requires_grad(true);
}

Tensor DenseLayer::forward(const Tensor& x) const {
  require_trailing(x, in_, "dense");
  return add(matmul(x, weight_), bias_);
}

void DenseLayer::collect_parameters(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

// ---------------------------------------------------------------------------
// LayerNormLayer
// ---------------------------------------------------------------------------

LayerNormLayer::LayerNormLayer(std::size_t features, double epsilon)
    : features_(features), epsilon_(epsilon), gain_(Tensor::ones({features})),
      shift_(Tensor::zeros({features})) {
  if (features == 0) throw ContractError("layer norm needs features >= 1");
  if (epsilon <= 0.0) throw ContractError("layer norm epsilon must be > 0");
  gain_.set_requires_grad(true);
  shift_.set_requires_grad(true);
}

Tensor LayerNormLayer::forward(const Tensor& x) const {
  require_trailing(x, features_, "layer_norm");
  Tensor mu = mean(x, {-1}, true);
  Tensor centered = sub(x, mu);
  Tensor var = mean(mul(centered, centered), {-1}, true);
  Tensor norm = div(centered, sqrt(add_scalar(var, epsilon_)));
  return add(mul(norm, gain_), shift_);
}

void LayerNormLayer::collect_parameters(const std::string& prefix,
                                        ParamList& out) {
  out.push_back({prefix + ".gain", gain_});
  out.push_back({prefix + ".shift", shift_});
}

// ---------------------------------------------------------------------------
// BatchNormLayer
// ---------------------------------------------------------------------------

BatchNormLayer::BatchNormLayer(std::size_t features, double epsilon,
                               double momentum)
    : features_(features), epsilon_(epsilon), momentum_(momentum),
      gain_(Tensor::ones({features})), shift_(Tensor::zeros({features})),
      running_mean_(Tensor::zeros({features})),
      running_var_(Tensor::ones({features})) {
  if (features == 0) throw ContractError("batch norm needs features >= 1");
  if (epsilon <= 0.0) throw ContractError("batch norm epsilon must be > 0");
  if (momentum <= 0.0 || momentum >= 1.0) {
    throw ContractError("batch norm momentum must lie in (0, 1)");
  }
  gain_.set_requires_grad(true);
  shift_.set_requires_grad(true);
}

Tensor BatchNormLayer::forward(const Tensor& x, Mode mode) {
  require_trailing(x, features_, "batch_norm");

  if (mode == Mode::kInfer) {
    Tensor norm = div(sub(x, running_mean_),
                      sqrt(add_scalar(running_var_, epsilon_)));
    return add(mul(norm, gain_), shift_);
  }

  std::size_t slice = x.size() / features_;
  if (slice < 2) {
    throw ContractError(
        "batch_norm train mode needs at least 2 samples per feature, got " +
        shape_to_string(x.shape()));
  }
  std::vector<int> axes(x.rank() - 1);
  for (std::size_t d = 0; d + 1 < x.rank(); ++d) axes[d] = static_cast<int>(d);

  Tensor mu = mean(x, axes, true);
  Tensor centered = sub(x, mu);
  Tensor var = mean(mul(centered, centered), axes, true);
  Tensor norm = div(centered, sqrt(add_scalar(var, epsilon_)));
  Tensor out = add(mul(norm, gain_), shift_);

  // Running aggregates live outside the graph; fold in the batch statistics.
  const auto& batch_mean = mu.values();
  const auto& batch_var = var.values();
  auto& rm = running_mean_.mutable_values();
  auto& rv = running_var_.mutable_values();
  for (std::size_t f = 0; f < features_; ++f) {
    rm[f] = momentum_ * rm[f] + (1.0 - momentum_) * batch_mean[f];
    rv[f] = momentum_ * rv[f] + (1.0 - momentum_) * batch_var[f];
  }
  return out;
}

void BatchNormLayer::collect_parameters(const std::string& prefix,
                                        ParamList& out) {
  out.push_back({prefix + ".gain", gain_});
  out.push_back({prefix + ".shift", shift_});
}

void BatchNormLayer::collect_state(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".running_mean", running_mean_});
  out.push_back({prefix + ".running_var", running_var_});
}

// ---------------------------------------------------------------------------
// DropoutLayer
// ---------------------------------------------------------------------------

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ContractError("dropout rate must lie in [0, 1), got " +
                        std::to_string(rate));
  }
}

Tensor DropoutLayer::forward(const Tensor& x, Mode mode,
                             std::mt19937_64& rng) const {
  if (mode == Mode::kInfer || rate_ == 0.0) return x;
  std::bernoulli_distribution drop(rate_);
  double scale = 1.0 / (1.0 - rate_);
  std::vector<double> mask(x.size());
  for (double& v : mask) v = drop(rng) ? 0.0 : scale;
  return mul(x, Tensor(x.shape(), std::move(mask)));
}

// ---------------------------------------------------------------------------
// TemporalAttention
// ---------------------------------------------------------------------------

TemporalAttention::TemporalAttention(std::size_t steps, std::mt19937_64& rng)
    : steps_(steps), dense_(steps, steps, rng) {
  if (steps == 0) throw ContractError("temporal attention needs steps >= 1");
}

Tensor TemporalAttention::weights(const Tensor& x) const {
  if (x.rank() != 3 || x.extent(1) != steps_) {
    throw DimensionError("temporal_attention: expected (batch, " +
                         std::to_string(steps_) + ", features), got " +
                         shape_to_string(x.shape()));
  }
  Tensor by_feature = permute(x, {0, 2, 1});      // (batch, features, T)
  Tensor logits = dense_.forward(by_feature);     // (batch, features, T)
  Tensor w = softmax(logits, -1);
  return permute(w, {0, 2, 1});                   // (batch, T, features)
}

Tensor TemporalAttention::forward(const Tensor& x) const {
  return mul(x, weights(x));
}

void TemporalAttention::collect_parameters(const std::string& prefix,
                                           ParamList& out) {
  dense_.collect_parameters(prefix + ".dense", out);
}

}  // namespace hycast
