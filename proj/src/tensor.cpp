#include "hycast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hycast/error.hpp"
#include "hycast/tape.hpp"

namespace hycast {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ")";
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) {
    strides[i - 1] = strides[i] * shape[i];
  }
  return strides;
}

void TensorImpl::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
}

void TensorImpl::accumulate_grad(const double* values, std::size_t n) {
  ensure_grad();
  for (std::size_t i = 0; i < n; ++i) grad[i] += values[i];
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty()) {
    throw ContractError("tensor shape must have at least one extent");
  }
  for (std::size_t e : shape) {
    if (e == 0) {
      throw ContractError("tensor extents must be >= 1, got " +
                          shape_to_string(shape));
    }
  }
}

std::shared_ptr<TensorImpl> make_impl(Shape shape, std::vector<double> data) {
  validate_shape(shape);
  if (shape_numel(shape) != data.size()) {
    throw ContractError("shape " + shape_to_string(shape) + " wants " +
                        std::to_string(shape_numel(shape)) +
                        " values, got " + std::to_string(data.size()));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  return impl;
}

}  // namespace

Tensor::Tensor(Shape shape) {
  std::vector<double> data(shape_numel(shape), 0.0);
  impl_ = make_impl(std::move(shape), std::move(data));
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : impl_(make_impl(std::move(shape), std::move(values))) {}

Tensor Tensor::zeros(Shape shape) { return Tensor(std::move(shape)); }

Tensor Tensor::ones(Shape shape) { return full(std::move(shape), 1.0); }

Tensor Tensor::full(Shape shape, double value) {
  std::vector<double> data(shape_numel(shape), value);
  return Tensor(std::move(shape), std::move(data));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::uniform(Shape shape, double lo, double hi,
                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = dist(rng);
  return Tensor(std::move(shape), std::move(data));
}

Tensor Tensor::gaussian(Shape shape, double mean, double stddev,
                        std::mt19937_64& rng) {
  std::normal_distribution<double> dist(mean, stddev);
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = dist(rng);
  return Tensor(std::move(shape), std::move(data));
}

Tensor Tensor::glorot(Shape shape, std::size_t fan_in, std::size_t fan_out,
                      std::mt19937_64& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform(std::move(shape), -bound, bound, rng);
}

const Shape& Tensor::shape() const {
  if (!impl_) throw ContractError("use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::size() const {
  if (!impl_) throw ContractError("use of undefined tensor");
  return impl_->data.size();
}

std::size_t Tensor::extent(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw ContractError("axis " + std::to_string(axis) +
                        " out of range for shape " + shape_to_string(s));
  }
  return s[axis];
}

const std::vector<double>& Tensor::values() const {
  if (!impl_) throw ContractError("use of undefined tensor");
  return impl_->data;
}

double Tensor::at(std::size_t flat) const {
  const auto& v = values();
  if (flat >= v.size()) {
    throw ContractError("flat index " + std::to_string(flat) +
                        " out of range for size " + std::to_string(v.size()));
  }
  return v[flat];
}

double Tensor::at(const std::vector<std::size_t>& index) const {
  const Shape& s = shape();
  if (index.size() != s.size()) {
    throw ContractError("index rank " + std::to_string(index.size()) +
                        " does not match tensor rank " +
                        std::to_string(s.size()));
  }
  auto strides = row_major_strides(s);
  std::size_t flat = 0;
  for (std::size_t d = 0; d < s.size(); ++d) {
    if (index[d] >= s[d]) {
      throw ContractError("index out of range on axis " + std::to_string(d));
    }
    flat += index[d] * strides[d];
  }
  return impl_->data[flat];
}

double Tensor::scalar_value() const {
  if (size() != 1) {
    throw ContractError("scalar_value on tensor of shape " +
                        shape_to_string(shape()));
  }
  return impl_->data[0];
}

std::vector<double>& Tensor::mutable_values() {
  if (!impl_) throw ContractError("use of undefined tensor");
  Tape& tape = Tape::active();
  if (impl_->recorded_epoch == tape.epoch() && tape.node_count() > 0) {
    throw ContractError(
        "tensor participates in a pending graph; mutating it would corrupt "
        "backward");
  }
  return impl_->data;
}

Tensor& Tensor::set_requires_grad(bool on) {
  if (!impl_) throw ContractError("use of undefined tensor");
  impl_->requires_grad = on;
  return *this;
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

const std::vector<double>& Tensor::grad() const {
  if (!impl_) throw ContractError("use of undefined tensor");
  if (!impl_->requires_grad) {
    throw ContractError("grad() on tensor without requires_grad");
  }
  impl_->ensure_grad();  // leaves the loss never reached read as zeros
  return impl_->grad;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

void Tensor::zero_grad() {
  if (!impl_) return;
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  return Tensor(shape(), values());
}

}  // namespace hycast
