#include "hycast/tape.hpp"

#include "hycast/error.hpp"

namespace hycast {

Tape& Tape::active() {
  thread_local Tape tape;
  return tape;
}

std::size_t Tape::emit(std::vector<std::shared_ptr<TensorImpl>> inputs,
                       std::shared_ptr<TensorImpl> output,
                       std::function<void()> backward_fn, const char* op) {
  std::size_t id = nodes_.size();
  output->node_id = static_cast<std::int64_t>(id);
  output->recorded_epoch = epoch_;
  for (auto& in : inputs) in->recorded_epoch = epoch_;
  nodes_.push_back(
      {std::move(inputs), std::move(output), std::move(backward_fn), op});
  return id;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? shape_to_string(loss.shape())
                                        : std::string("<undefined>")));
  }
  if (nodes_.empty()) {
    throw ContractError("backward on an empty graph");
  }
  auto& impl = *loss.impl();
  impl.grad.assign(1, 1.0);
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& node = nodes_[i];
    // A node whose output gradient was never touched contributes nothing.
    if (node.output->grad.empty()) continue;
    node.backward();
  }
  reset();
}

void Tape::reset() {
  nodes_.clear();
  ++epoch_;  // invalidates node ids recorded on the consumed graph
}

NoGradGuard::NoGradGuard() { ++Tape::active().no_grad_depth_; }

NoGradGuard::~NoGradGuard() { --Tape::active().no_grad_depth_; }

void backward(const Tensor& loss) { Tape::active().backward(loss); }

}  // namespace hycast
