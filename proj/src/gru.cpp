#include "hycast/gru.hpp"

#include <vector>

#include "hycast/error.hpp"
#include "hycast/ops.hpp"

namespace hycast {

namespace {

std::size_t checked_width(std::size_t width, const char* which) {
  if (width == 0) {
    throw ContractError(std::string("gru cell ") + which +
                        " width must be positive");
  }
  return width;
}

GruCell::Gate make_gate(std::size_t input, std::size_t hidden,
                        std::mt19937_64& rng) {
  GruCell::Gate gate{
      Tensor::glorot({input, hidden}, input, hidden, rng),
      Tensor::glorot({hidden, hidden}, hidden, hidden, rng),
      Tensor::zeros({hidden}),
      Tensor::zeros({hidden}),
  };
  gate.input_weight.set_requires_grad(true);
  gate.recurrent_weight.set_requires_grad(true);
  gate.input_bias.set_requires_grad(true);
  gate.recurrent_bias.set_requires_grad(true);
  return gate;
}

// x.W + b_in + h.U + b_rec, the pre-activation shared by all three gates.
Tensor gate_input(const GruCell::Gate& gate, const Tensor& h,
                  const Tensor& x) {
  return add(add(matmul(x, gate.input_weight), gate.input_bias),
             add(matmul(h, gate.recurrent_weight), gate.recurrent_bias));
}

void collect_gate(GruCell::Gate& gate, const std::string& prefix,
                  ParamList& out) {
  out.push_back({prefix + ".input_weight", gate.input_weight});
  out.push_back({prefix + ".recurrent_weight", gate.recurrent_weight});
  out.push_back({prefix + ".input_bias", gate.input_bias});
  out.push_back({prefix + ".recurrent_bias", gate.recurrent_bias});
}

}  // namespace

GruCell::GruCell(std::size_t input, std::size_t hidden, std::mt19937_64& rng)
    : input_(checked_width(input, "input")),
      hidden_(checked_width(hidden, "hidden")),
      update_(make_gate(input, hidden, rng)),
      reset_(make_gate(input, hidden, rng)),
      candidate_(make_gate(input, hidden, rng)) {}

Tensor GruCell::step(const Tensor& h_prev, const Tensor& x_t) const {
  if (x_t.rank() != 2 || x_t.extent(1) != input_) {
    throw DimensionError("gru_step: expected input (batch, " +
                         std::to_string(input_) + "), got " +
                         shape_to_string(x_t.shape()));
  }
  if (h_prev.rank() != 2 || h_prev.extent(1) != hidden_ ||
      h_prev.extent(0) != x_t.extent(0)) {
    throw DimensionError("gru_step: expected state (batch, " +
                         std::to_string(hidden_) + ") matching input batch, "
                         "got " + shape_to_string(h_prev.shape()));
  }
  Tensor z = sigmoid(gate_input(update_, h_prev, x_t));
  Tensor r = sigmoid(gate_input(reset_, h_prev, x_t));
  Tensor candidate =
      tanh(add(add(matmul(x_t, candidate_.input_weight), candidate_.input_bias),
               mul(r, add(matmul(h_prev, candidate_.recurrent_weight),
                          candidate_.recurrent_bias))));
  // (1-z).h + z.c, written as h + z.(c-h) to spend one op less.
  return add(h_prev, mul(z, sub(candidate, h_prev)));
}

void GruCell::collect_parameters(const std::string& prefix, ParamList& out) {
  collect_gate(update_, prefix + ".update", out);
  collect_gate(reset_, prefix + ".reset", out);
  collect_gate(candidate_, prefix + ".candidate", out);
}

Tensor gru_sequence(const GruCell& cell, const Tensor& x, Direction direction) {
  if (x.rank() != 3 || x.extent(2) != cell.input_width()) {
    throw DimensionError("gru_sequence: expected (batch, T, " +
                         std::to_string(cell.input_width()) + "), got " +
                         shape_to_string(x.shape()));
  }
  std::size_t batch = x.extent(0);
  std::size_t steps = x.extent(1);

  Tensor h = Tensor::zeros({batch, cell.hidden_width()});
  std::vector<Tensor> states(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    std::size_t t = direction == Direction::kForward ? i : steps - 1 - i;
    Tensor x_t = reshape(slice(x, 1, t, 1), {batch, cell.input_width()});
    h = cell.step(h, x_t);
    states[t] = reshape(h, {batch, 1, cell.hidden_width()});
  }
  return steps == 1 ? states[0] : concat(states, 1);
}

BiGru::BiGru(std::size_t input, std::size_t hidden, std::mt19937_64& rng)
    : forward_(input, hidden, rng), backward_(input, hidden, rng) {}

Tensor BiGru::forward(const Tensor& x) const {
  Tensor ahead = gru_sequence(forward_, x, Direction::kForward);
  Tensor behind = gru_sequence(backward_, x, Direction::kBackward);
  return concat({ahead, behind}, 2);
}

void BiGru::collect_parameters(const std::string& prefix, ParamList& out) {
  forward_.collect_parameters(prefix + ".forward", out);
  backward_.collect_parameters(prefix + ".backward", out);
}

std::size_t gru_param_count(std::size_t input, std::size_t hidden,
                            bool dual_bias) {
  std::size_t biases = dual_bias ? 2 * hidden : hidden;
  return 3 * (hidden * (input + hidden) + biases);
}

std::size_t lstm_param_count(std::size_t input, std::size_t hidden) {
  return 4 * (hidden * (input + hidden) + hidden);
}

}  // namespace hycast
