#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace hycast {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

// Backing store for a tensor. Shared between the handle and the tape so the
// graph keeps operands alive until backward runs.
struct TensorImpl {
  Shape shape;
  std::vector<double> data;  // row-major
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  // Tape bookkeeping: which tape epoch last recorded or consumed this tensor.
  std::uint64_t recorded_epoch = 0;
  std::int64_t node_id = -1;

  std::size_t size() const { return data.size(); }
  void accumulate_grad(const double* values, std::size_t n);
  void ensure_grad();
};

// Dense n-dimensional array of doubles. Handles are cheap to copy; the data
// they point at must not be mutated once the tensor has been recorded on the
// active tape (mutable_values enforces this).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape);
  static Tensor ones(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor uniform(Shape shape, double lo, double hi,
                        std::mt19937_64& rng);
  static Tensor gaussian(Shape shape, double mean, double stddev,
                         std::mt19937_64& rng);
  // Glorot-style uniform init in +-sqrt(6 / (fan_in + fan_out)).
  static Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out,
                       std::mt19937_64& rng);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t extent(std::size_t axis) const;

  const std::vector<double>& values() const;
  double at(std::size_t flat) const;
  double at(const std::vector<std::size_t>& index) const;
  double scalar_value() const;  // contract: size() == 1

  // Mutable access to the data. Throws ContractError if this tensor is part
  // of a pending graph on the active tape (mutation would corrupt backward).
  std::vector<double>& mutable_values();

  Tensor& set_requires_grad(bool on);
  bool requires_grad() const;
  // Gradient of the last backward pass. Materializes zeros for leaves the
  // loss never reached.
  const std::vector<double>& grad() const;
  bool has_grad() const;
  void zero_grad();

  // Deep copy of shape+data (fresh leaf, no grad state).
  Tensor clone() const;

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Row-major strides for a shape.
std::vector<std::size_t> row_major_strides(const Shape& shape);

}  // namespace hycast
