#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "hycast/layers.hpp"
#include "hycast/tensor.hpp"

namespace hycast {

// Multi-head scaled dot-product self-attention over (batch, T, d_model)
// input. Each head projects into width d_k = d_model / heads with its own
// query/key/value matrices; head outputs are concatenated and mixed by an
// output projection. No positional encoding and no masking: attention is
// full and permutation-equivariant over the window.
class MultiHeadAttention {
 public:
  MultiHeadAttention(std::size_t d_model, std::size_t heads,
                     std::mt19937_64& rng);

  Tensor forward(const Tensor& x) const;
  // Per-head attention maps A_i, each (batch, T, T) with rows summing to 1.
  std::vector<Tensor> attention_maps(const Tensor& x) const;

  std::size_t d_model() const { return d_model_; }
  std::size_t heads() const { return heads_; }
  std::size_t head_width() const { return d_k_; }
  std::size_t parameter_count() const {
    return 3 * heads_ * d_model_ * d_k_ + heads_ * d_k_ * d_model_;
  }
  void collect_parameters(const std::string& prefix, ParamList& out);

  Tensor& query_weight(std::size_t head) { return w_q_[head]; }
  Tensor& key_weight(std::size_t head) { return w_k_[head]; }
  Tensor& value_weight(std::size_t head) { return w_v_[head]; }
  Tensor& output_weight() { return w_o_; }

 private:
  Tensor head_output(const Tensor& x, std::size_t head, Tensor* map_out) const;

  std::size_t d_model_;
  std::size_t heads_;
  std::size_t d_k_;
  std::vector<Tensor> w_q_;  // per head, [d_model, d_k]
  std::vector<Tensor> w_k_;
  std::vector<Tensor> w_v_;
  Tensor w_o_;               // [heads * d_k, d_model]
};

// One encoder layer: self-attention and a position-wise feed-forward network,
// each wrapped in a residual connection followed by layer normalization
// (post-norm ordering).
class EncoderLayer {
 public:
  EncoderLayer(std::size_t d_model, std::size_t heads, std::size_t ffn_hidden,
               std::mt19937_64& rng);

  // max(0, x.W1 + b1).W2 + b2, applied position-wise.
  Tensor feed_forward(const Tensor& x) const;
  Tensor forward(const Tensor& x) const;

  std::size_t d_model() const { return attention_.d_model(); }
  std::size_t parameter_count() const;
  void collect_parameters(const std::string& prefix, ParamList& out);

  MultiHeadAttention& attention() { return attention_; }
  DenseLayer& ffn_in() { return ffn_in_; }
  DenseLayer& ffn_out() { return ffn_out_; }
  LayerNormLayer& norm_attention() { return norm_attention_; }
  LayerNormLayer& norm_ffn() { return norm_ffn_; }

 private:
  MultiHeadAttention attention_;
  DenseLayer ffn_in_;   // [d_model, ffn_hidden]
  DenseLayer ffn_out_;  // [ffn_hidden, d_model]
  LayerNormLayer norm_attention_;
  LayerNormLayer norm_ffn_;
};

}  // namespace hycast
