#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "hycast/tensor.hpp"

namespace hycast {

// Append-only record of differentiable operations. One thread-local tape is
// active at a time; a training session records forward ops onto it and
// consumes it with backward(). Nodes are stored in execution order, so every
// node's inputs precede it and the reverse sweep visits each node once.
class Tape {
 public:
  static Tape& active();

  bool recording() const { return no_grad_depth_ == 0; }

  // Record one operation. `backward_fn` reads output->grad and accumulates
  // into the inputs' grads. Returns the node id.
  std::size_t emit(std::vector<std::shared_ptr<TensorImpl>> inputs,
                   std::shared_ptr<TensorImpl> output,
                   std::function<void()> backward_fn, const char* op);

  // Reverse sweep from a scalar loss: seeds d(loss)/d(loss) = 1, visits the
  // recorded nodes in reverse order exactly once, then resets the tape.
  void backward(const Tensor& loss);

  void reset();

  std::size_t node_count() const { return nodes_.size(); }
  std::uint64_t epoch() const { return epoch_; }

 private:
  struct Node {
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    std::shared_ptr<TensorImpl> output;
    std::function<void()> backward;
    const char* op;
  };

  std::vector<Node> nodes_;
  std::uint64_t epoch_ = 1;
  int no_grad_depth_ = 0;

  friend class NoGradGuard;
};

// RAII guard that suspends recording on the active tape (inference, finite
// difference probes, optimizer internals).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// Convenience: Tape::active().backward(loss).
void backward(const Tensor& loss);

}  // namespace hycast
