#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "hycast/layers.hpp"
#include "hycast/tensor.hpp"

namespace hycast {

// Uniform B-spline knot grid over [t_min, t_max]: G intervals of degree-k
// splines, with the knot vector extended uniformly by k knots on each side so
// that G + k basis functions cover the range with partition of unity.
struct SplineGrid {
  std::size_t intervals = 0;  // G
  std::size_t degree = 0;     // k
  double t_min = 0.0;
  double t_max = 0.0;
  std::vector<double> knots;  // G + 2k + 1 ascending knots

  SplineGrid(std::size_t intervals, std::size_t degree, double t_min,
             double t_max);

  std::size_t basis_count() const { return intervals + degree; }
  double clamp(double t) const;
};

// All basis values N_i(t), i in [0, basis_count). Values are nonnegative, at
// most degree+1 are nonzero, and they sum to 1 for t inside the grid; t
// outside the grid is clamped to the nearest boundary.
std::vector<double> bspline_basis(const SplineGrid& grid, double t);

// Basis values and their derivatives d/dt at t. Derivatives are zero for t
// clamped outside the grid.
void bspline_basis_and_derivative(const SplineGrid& grid, double t,
                                  double* basis, double* derivative);

// Tensor form: maps shape (...) to (..., basis_count) with a recorded
// backward through d/dt.
Tensor spline_basis(const Tensor& x, const SplineGrid& grid);

// One learnable univariate edge function:
// f(t) = base_weight * silu(t) + sum_i coefficients[i] * N_i(t).
struct SplineFunction {
  SplineGrid grid;
  std::vector<double> coefficients;  // basis_count entries
  double base_weight = 0.0;

  double eval(double t) const;
};

// One Kolmogorov-Arnold layer: a learnable spline function on every
// (input, output) edge; each output node sums its incoming edge values with
// no further activation. Coefficients are packed (in, basis, out) so the
// whole layer evaluates as one batched contraction.
class KanLayer {
 public:
  KanLayer(std::size_t in, std::size_t out, SplineGrid grid,
           std::mt19937_64& rng, bool silu_residual = true);

  Tensor forward(const Tensor& x) const;

  std::size_t in_width() const { return in_; }
  std::size_t out_width() const { return out_; }
  bool has_residual() const { return residual_; }
  const SplineGrid& grid() const { return grid_; }
  std::size_t parameter_count() const;
  void collect_parameters(const std::string& prefix, ParamList& out);

  // Scalar view of one edge, for tests and inspection.
  SplineFunction edge(std::size_t input, std::size_t output) const;

  Tensor& coefficients() { return coefficients_; }  // (in, basis, out)
  Tensor& base_weight() { return base_weight_; }    // (in, out)

 private:
  std::size_t in_;
  std::size_t out_;
  SplineGrid grid_;
  bool residual_;
  Tensor coefficients_;
  Tensor base_weight_;
};

// Composition of KAN layers (widths[0] -> widths[1] -> ... -> widths.back()).
class KanStack {
 public:
  KanStack(const std::vector<std::size_t>& widths, const SplineGrid& grid,
           std::mt19937_64& rng, bool silu_residual = true);

  Tensor forward(const Tensor& x) const;
  std::vector<KanLayer>& layers() { return layers_; }
  std::size_t parameter_count() const;
  void collect_parameters(const std::string& prefix, ParamList& out);

 private:
  std::vector<KanLayer> layers_;
};

}  // namespace hycast
