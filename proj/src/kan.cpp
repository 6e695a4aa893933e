#include "hycast/kan.hpp"

#include <algorithm>
#include <cmath>

#include "hycast/error.hpp"
#include "hycast/ops.hpp"
#include "hycast/tape.hpp"

namespace hycast {

// ---------------------------------------------------------------------------
// SplineGrid and basis evaluation
// ---------------------------------------------------------------------------

SplineGrid::SplineGrid(std::size_t intervals_in, std::size_t degree_in,
                       double lo, double hi)
    : intervals(intervals_in), degree(degree_in), t_min(lo), t_max(hi) {
  if (intervals == 0 || degree == 0) {
    throw ContractError("spline grid needs intervals >= 1 and degree >= 1");
  }
  if (!(t_min < t_max)) {
    throw ContractError("spline grid range is empty: [" +
                        std::to_string(t_min) + ", " + std::to_string(t_max) +
                        "]");
  }
  double h = (t_max - t_min) / static_cast<double>(intervals);
  knots.resize(intervals + 2 * degree + 1);
  for (std::size_t i = 0; i < knots.size(); ++i) {
    knots[i] = t_min + (static_cast<double>(i) - static_cast<double>(degree)) * h;
  }
}

double SplineGrid::clamp(double t) const {
  return std::min(std::max(t, t_min), t_max);
}

void bspline_basis_and_derivative(const SplineGrid& grid, double t,
                                  double* basis, double* derivative) {
  const auto& knots = grid.knots;
  std::size_t k = grid.degree;
  std::size_t cells = knots.size() - 1;  // zero-degree segment count
  std::size_t n_basis = grid.basis_count();

  bool inside = t >= grid.t_min && t <= grid.t_max;
  double tc = grid.clamp(t);

  // Locate the zero-degree segment, keeping the boundary point t_max inside
  // the last interior interval.
  std::size_t seg = k;
  while (seg + 1 < k + grid.intervals && tc >= knots[seg + 1]) ++seg;

  std::vector<double> n(cells, 0.0);
  n[seg] = 1.0;

  for (std::size_t d = 1; d <= k; ++d) {
    if (d == k && derivative != nullptr) {
      // n currently holds the degree k-1 values.
      for (std::size_t i = 0; i < n_basis; ++i) {
        double a = knots[i + k] - knots[i];
        double b = knots[i + k + 1] - knots[i + 1];
        double slope = (a > 0.0 ? n[i] / a : 0.0) -
                       (b > 0.0 ? n[i + 1] / b : 0.0);
        derivative[i] = inside ? static_cast<double>(k) * slope : 0.0;
      }
    }
    for (std::size_t i = 0; i + d < cells; ++i) {
      double a = knots[i + d] - knots[i];
      double b = knots[i + d + 1] - knots[i + 1];
      double left = a > 0.0 ? (tc - knots[i]) / a * n[i] : 0.0;
      double right = b > 0.0 ? (knots[i + d + 1] - tc) / b * n[i + 1] : 0.0;
      n[i] = left + right;
    }
  }
  std::copy(n.begin(), n.begin() + static_cast<std::ptrdiff_t>(n_basis), basis);
}

std::vector<double> bspline_basis(const SplineGrid& grid, double t) {
  std::vector<double> out(grid.basis_count());
  bspline_basis_and_derivative(grid, t, out.data(), nullptr);
  return out;
}

Tensor spline_basis(const Tensor& x, const SplineGrid& grid) {
  std::size_t n_basis = grid.basis_count();
  Shape out_shape = x.shape();
  out_shape.push_back(n_basis);

  const auto& xv = x.values();
  std::vector<double> out(xv.size() * n_basis);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    bspline_basis_and_derivative(grid, xv[i], out.data() + i * n_basis,
                                 nullptr);
  }

  Tensor result(out_shape, std::move(out));
  if (Tape::active().recording() && x.requires_grad()) {
    result.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = result.impl();
    SplineGrid grid_copy = grid;
    Tape::active().emit(
        {xi}, oi,
        [xi, oi, grid_copy, n_basis]() {
          const auto& g = oi->grad;
          xi->ensure_grad();
          std::vector<double> basis(n_basis), deriv(n_basis);
          for (std::size_t i = 0; i < xi->data.size(); ++i) {
            bspline_basis_and_derivative(grid_copy, xi->data[i], basis.data(),
                                         deriv.data());
            double acc = 0.0;
            for (std::size_t b = 0; b < n_basis; ++b) {
              acc += g[i * n_basis + b] * deriv[b];
            }
            xi->grad[i] += acc;
          }
        },
        "spline_basis");
  }
  return result;
}

double SplineFunction::eval(double t) const {
  std::vector<double> basis = bspline_basis(grid, t);
  double acc = base_weight * (t / (1.0 + std::exp(-t)));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    acc += coefficients[i] * basis[i];
  }
  return acc;
}

// ---------------------------------------------------------------------------
// KanLayer
// ---------------------------------------------------------------------------

KanLayer::KanLayer(std::size_t in, std::size_t out, SplineGrid grid,
                   std::mt19937_64& rng, bool silu_residual)
    : in_(in), out_(out), grid_(std::move(grid)), residual_(silu_residual) {
  if (in == 0 || out == 0) {
    throw ContractError("kan layer widths must be positive");
  }
  // Near-linear start: small spline coefficients, signal carried by the
  // silu residual until the edges learn shape.
  coefficients_ =
      Tensor::gaussian({in, grid_.basis_count(), out}, 0.0, 0.1, rng);
  coefficients_.set_requires_grad(true);
  base_weight_ = Tensor::glorot({in, out}, in, out, rng);
  base_weight_.set_requires_grad(residual_);
  if (!residual_) {
    auto& bw = base_weight_.mutable_values();
    std::fill(bw.begin(), bw.end(), 0.0);
  }
}

Tensor KanLayer::forward(const Tensor& x) const {
  if (x.rank() < 2 || x.extent(x.rank() - 1) != in_) {
    throw DimensionError("kan_forward: expected trailing extent " +
                         std::to_string(in_) + ", got shape " +
                         shape_to_string(x.shape()));
  }
  Shape lead(x.shape().begin(), x.shape().end() - 1);
  std::size_t rows = shape_numel(lead);

  Tensor flat = reshape(x, {rows, in_});
  Tensor basis = spline_basis(flat, grid_);            // (rows, in, basis)
  Tensor by_input = permute(basis, {1, 0, 2});         // (in, rows, basis)
  Tensor per_edge = matmul(by_input, coefficients_);   // (in, rows, out)
  Tensor summed = sum(per_edge, {0}, false);           // (rows, out)

  Tensor out = residual_
                   ? add(summed, matmul(silu(flat), base_weight_))
                   : summed;
  Shape out_shape = lead;
  out_shape.push_back(out_);
  return reshape(out, out_shape);
}

std::size_t KanLayer::parameter_count() const {
  std::size_t coeffs = in_ * grid_.basis_count() * out_;
  return residual_ ? coeffs + in_ * out_ : coeffs;
}

void KanLayer::collect_parameters(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".coefficients", coefficients_});
  if (residual_) {
    out.push_back({prefix + ".base_weight", base_weight_});
  }
}

SplineFunction KanLayer::edge(std::size_t input, std::size_t output) const {
  if (input >= in_ || output >= out_) {
    throw ContractError("kan edge index out of range");
  }
  SplineFunction f{grid_, {}, 0.0};
  std::size_t n_basis = grid_.basis_count();
  f.coefficients.resize(n_basis);
  for (std::size_t b = 0; b < n_basis; ++b) {
    f.coefficients[b] = coefficients_.at({input, b, output});
  }
  f.base_weight = residual_ ? base_weight_.at({input, output}) : 0.0;
  return f;
}

// ---------------------------------------------------------------------------
// KanStack
// ---------------------------------------------------------------------------

KanStack::KanStack(const std::vector<std::size_t>& widths,
                   const SplineGrid& grid, std::mt19937_64& rng,
                   bool silu_residual) {
  if (widths.size() < 2) {
    throw ContractError("kan stack needs at least two widths");
  }
  layers_.reserve(widths.size() - 1);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers_.emplace_back(widths[i], widths[i + 1], grid, rng, silu_residual);
  }
}

Tensor KanStack::forward(const Tensor& x) const {
  Tensor h = x;
  for (const auto& layer : layers_) h = layer.forward(h);
  return h;
}

std::size_t KanStack::parameter_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) total += layer.parameter_count();
  return total;
}

void KanStack::collect_parameters(const std::string& prefix, ParamList& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].collect_parameters(prefix + ".layer" + std::to_string(i), out);
  }
}

}  // namespace hycast
