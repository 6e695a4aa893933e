#pragma once

#include <vector>

#include "hycast/tensor.hpp"

namespace hycast {

// Broadcast two shapes with trailing-dimension alignment. Throws
// DimensionError naming both shapes when they are incompatible.
Shape broadcast_shapes(const Shape& a, const Shape& b);

// Elementwise binary ops with broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);

// Elementwise unary ops.
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor sqrt(const Tensor& x);

// Numerically stabilized softmax along `axis` (negative axes allowed).
Tensor softmax(const Tensor& x, int axis);

// Batched matrix product over the trailing two axes; leading axes broadcast.
Tensor matmul(const Tensor& a, const Tensor& b);

// Reductions. The axis forms reduce over the given axes; keepdims retains
// size-1 extents in place of the reduced ones.
Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, std::vector<int> axes, bool keepdims);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, std::vector<int> axes, bool keepdims);

// Layout ops.
Tensor permute(const Tensor& x, const std::vector<std::size_t>& order);
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start,
             std::size_t length);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }

}  // namespace hycast
