#include "hycast/attention.hpp"

#include <cmath>

#include "hycast/error.hpp"
#include "hycast/ops.hpp"

namespace hycast {

namespace {

void require_sequence(const Tensor& x, std::size_t d_model, const char* op) {
  if (x.rank() != 3 || x.extent(2) != d_model) {
    throw DimensionError(std::string(op) + ": expected (batch, T, " +
                         std::to_string(d_model) + "), got " +
                         shape_to_string(x.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// MultiHeadAttention
// ---------------------------------------------------------------------------

MultiHeadAttention::MultiHeadAttention(std::size_t d_model, std::size_t heads,
                                       std::mt19937_64& rng)
    : d_model_(d_model), heads_(heads), d_k_(d_model / heads) {
  if (d_model == 0 || heads == 0) {
    throw ContractError("attention widths must be positive");
  }
  if (d_model % heads != 0) {
    throw ContractError("d_model " + std::to_string(d_model) +
                        " is not divisible by heads " + std::to_string(heads));
  }
  w_q_.reserve(heads);
  w_k_.reserve(heads);
  w_v_.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    w_q_.push_back(
        Tensor::glorot({d_model, d_k_}, d_model, d_k_, rng).set_requires_grad(true));
    w_k_.push_back(
        Tensor::glorot({d_model, d_k_}, d_model, d_k_, rng).set_requires_grad(true));
    w_v_.push_back(
        Tensor::glorot({d_model, d_k_}, d_model, d_k_, rng).set_requires_grad(true));
  }
  w_o_ = Tensor::glorot({heads * d_k_, d_model}, heads * d_k_, d_model, rng);
  w_o_.set_requires_grad(true);
}

Tensor MultiHeadAttention::head_output(const Tensor& x, std::size_t head,
                                       Tensor* map_out) const {
  Tensor q = matmul(x, w_q_[head]);                      // (B, T, d_k)
  Tensor k = matmul(x, w_k_[head]);
  Tensor v = matmul(x, w_v_[head]);
  Tensor logits = mul_scalar(matmul(q, permute(k, {0, 2, 1})),
                             1.0 / std::sqrt(static_cast<double>(d_k_)));
  Tensor map = softmax(logits, -1);                      // (B, T, T)
  if (map_out != nullptr) *map_out = map;
  return matmul(map, v);                                 // (B, T, d_k)
}

Tensor MultiHeadAttention::forward(const Tensor& x) const {
  require_sequence(x, d_model_, "attend");
  std::vector<Tensor> outputs;
  outputs.reserve(heads_);
  for (std::size_t h = 0; h < heads_; ++h) {
    outputs.push_back(head_output(x, h, nullptr));
  }
  Tensor joined = heads_ == 1 ? outputs[0] : concat(outputs, 2);
  return matmul(joined, w_o_);
}

std::vector<Tensor> MultiHeadAttention::attention_maps(const Tensor& x) const {
  require_sequence(x, d_model_, "attend");
  std::vector<Tensor> maps(heads_);
  for (std::size_t h = 0; h < heads_; ++h) {
    head_output(x, h, &maps[h]);
  }
  return maps;
}

void MultiHeadAttention::collect_parameters(const std::string& prefix,
                                            ParamList& out) {
  for (std::size_t h = 0; h < heads_; ++h) {
    std::string head = prefix + ".head" + std::to_string(h);
    out.push_back({head + ".wq", w_q_[h]});
    out.push_back({head + ".wk", w_k_[h]});
    out.push_back({head + ".wv", w_v_[h]});
  }
  out.push_back({prefix + ".wo", w_o_});
}

// ---------------------------------------------------------------------------
// EncoderLayer
// ---------------------------------------------------------------------------

EncoderLayer::EncoderLayer(std::size_t d_model, std::size_t heads,
                           std::size_t ffn_hidden, std::mt19937_64& rng)
    : attention_(d_model, heads, rng), ffn_in_(d_model, ffn_hidden, rng),
      ffn_out_(ffn_hidden, d_model, rng), norm_attention_(d_model),
      norm_ffn_(d_model) {}

Tensor EncoderLayer::feed_forward(const Tensor& x) const {
  return ffn_out_.forward(relu(ffn_in_.forward(x)));
}

Tensor EncoderLayer::forward(const Tensor& x) const {
  require_sequence(x, attention_.d_model(), "encode");
  Tensor after_attention = norm_attention_.forward(add(x, attention_.forward(x)));
  return norm_ffn_.forward(add(after_attention, feed_forward(after_attention)));
}

std::size_t EncoderLayer::parameter_count() const {
  return attention_.parameter_count() + ffn_in_.parameter_count() +
         ffn_out_.parameter_count() + norm_attention_.parameter_count() +
         norm_ffn_.parameter_count();
}

void EncoderLayer::collect_parameters(const std::string& prefix,
                                      ParamList& out) {
  attention_.collect_parameters(prefix + ".attention", out);
  ffn_in_.collect_parameters(prefix + ".ffn_in", out);
  ffn_out_.collect_parameters(prefix + ".ffn_out", out);
  norm_attention_.collect_parameters(prefix + ".norm_attention", out);
  norm_ffn_.collect_parameters(prefix + ".norm_ffn", out);
}

}  // namespace hycast
