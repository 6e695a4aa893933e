#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "hycast/tensor.hpp"

namespace hycast {

enum class Mode { kTrain, kInfer };

// A trainable tensor with a stable, checkpoint-addressable name.
struct NamedParam {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

// Fully connected layer applied along the trailing axis: y = x.W + b.
class DenseLayer {
 public:
  DenseLayer(std::size_t in, std::size_t out, std::mt19937_64& rng);

  Tensor forward(const Tensor& x) const;
  std::size_t in_width() const { return in_; }
  std::size_t out_width() const { return out_; }
  std::size_t parameter_count() const { return in_ * out_ + out_; }
  void collect_parameters(const std::string& prefix, ParamList& out);

  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  std::size_t in_;
  std::size_t out_;
  Tensor weight_;  // [in, out]
  Tensor bias_;    // [out]
};

// Normalizes each trailing-axis slice to zero mean / unit variance, then
// applies a learned gain and shift.
class LayerNormLayer {
 public:
  explicit LayerNormLayer(std::size_t features, double epsilon = 1e-8);

  Tensor forward(const Tensor& x) const;
  std::size_t features() const { return features_; }
  std::size_t parameter_count() const { return 2 * features_; }
  void collect_parameters(const std::string& prefix, ParamList& out);

  Tensor& gain() { return gain_; }
  Tensor& shift() { return shift_; }

 private:
  std::size_t features_;
  double epsilon_;
  Tensor gain_;
  Tensor shift_;
};

// Normalizes each trailing-axis feature over all leading axes using batch
// statistics in train mode and running aggregates in infer mode.
class BatchNormLayer {
 public:
  BatchNormLayer(std::size_t features, double epsilon = 1e-5,
                 double momentum = 0.9);

  Tensor forward(const Tensor& x, Mode mode);
  std::size_t features() const { return features_; }
  // 4 arrays per feature: gain, shift, running mean, running variance.
  std::size_t parameter_count() const { return 4 * features_; }
  void collect_parameters(const std::string& prefix, ParamList& out);
  // Non-trainable state that still belongs in a checkpoint.
  void collect_state(const std::string& prefix, ParamList& out);

  Tensor& gain() { return gain_; }
  Tensor& shift() { return shift_; }
  Tensor& running_mean() { return running_mean_; }
  Tensor& running_var() { return running_var_; }

 private:
  std::size_t features_;
  double epsilon_;
  double momentum_;
  Tensor gain_;
  Tensor shift_;
  Tensor running_mean_;
  Tensor running_var_;
};

// Inverted dropout: train mode zeroes elements with probability `rate` and
// scales survivors by 1/(1-rate); infer mode is the identity.
class DropoutLayer {
 public:
  explicit DropoutLayer(double rate);

  Tensor forward(const Tensor& x, Mode mode, std::mt19937_64& rng) const;
  double rate() const { return rate_; }

 private:
  double rate_;
};

// Per-feature gating over time steps: transpose to (batch, features, T),
// learn a Dense(T -> T) whose softmax over T yields step weights, transpose
// back, and scale the input elementwise.
class TemporalAttention {
 public:
  TemporalAttention(std::size_t steps, std::mt19937_64& rng);

  // Step-weight tensor, shaped like x; slices over the T axis sum to 1.
  Tensor weights(const Tensor& x) const;
  Tensor forward(const Tensor& x) const;

  std::size_t steps() const { return steps_; }
  std::size_t parameter_count() const { return dense_.parameter_count(); }
  void collect_parameters(const std::string& prefix, ParamList& out);

  DenseLayer& dense() { return dense_; }

 private:
  std::size_t steps_;
  DenseLayer dense_;
};

}  // namespace hycast
