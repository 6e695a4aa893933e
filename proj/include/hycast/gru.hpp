#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "hycast/layers.hpp"
#include "hycast/tensor.hpp"

namespace hycast {

enum class Direction { kForward, kBackward };

// Gated recurrent unit cell in the dual-bias ("reset after") formulation:
// separate input-side and recurrent-side bias vectors per gate, with the
// reset gate applied to the already-biased recurrent candidate term. This is
// the variant whose parameter count is 3*(hidden*(input+hidden) + 2*hidden).
class GruCell {
 public:
  GruCell(std::size_t input, std::size_t hidden, std::mt19937_64& rng);

  // One update: h' = (1-z) . h_prev + z . candidate.
  Tensor step(const Tensor& h_prev, const Tensor& x_t) const;

  std::size_t input_width() const { return input_; }
  std::size_t hidden_width() const { return hidden_; }
  std::size_t parameter_count() const {
    return 3 * (hidden_ * (input_ + hidden_) + 2 * hidden_);
  }
  void collect_parameters(const std::string& prefix, ParamList& out);

  struct Gate {
    Tensor input_weight;      // [input, hidden]
    Tensor recurrent_weight;  // [hidden, hidden]
    Tensor input_bias;        // [hidden]
    Tensor recurrent_bias;    // [hidden]
  };

  Gate& update_gate() { return update_; }
  Gate& reset_gate() { return reset_; }
  Gate& candidate_gate() { return candidate_; }

 private:
  std::size_t input_;
  std::size_t hidden_;
  Gate update_;
  Gate reset_;
  Gate candidate_;
};

// Unrolls a cell over (batch, T, input) from a zero initial state. Forward
// emits h_1..h_T in order; backward runs over the reversed sequence and
// re-reverses its states, so position t holds the state conditioned on the
// suffix x_t..x_T.
Tensor gru_sequence(const GruCell& cell, const Tensor& x, Direction direction);

// Two equal-width cells over opposite directions, states concatenated per
// step along the feature axis.
class BiGru {
 public:
  BiGru(std::size_t input, std::size_t hidden, std::mt19937_64& rng);

  Tensor forward(const Tensor& x) const;

  std::size_t input_width() const { return forward_.input_width(); }
  std::size_t hidden_width() const { return forward_.hidden_width(); }
  std::size_t output_width() const { return 2 * hidden_width(); }
  std::size_t parameter_count() const {
    return forward_.parameter_count() + backward_.parameter_count();
  }
  void collect_parameters(const std::string& prefix, ParamList& out);

  GruCell& forward_cell() { return forward_; }
  GruCell& backward_cell() { return backward_; }

 private:
  GruCell forward_;
  GruCell backward_;
};

// Parameter-count formulas for the structural audit. `dual_bias` selects the
// two-bias-vector GRU variant implemented here; LSTM uses the conventional
// single-bias form.
std::size_t gru_param_count(std::size_t input, std::size_t hidden,
                            bool dual_bias = true);
std::size_t lstm_param_count(std::size_t input, std::size_t hidden);

}  // namespace hycast
