#include "hycast/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>

#include "hycast/error.hpp"
#include "hycast/tape.hpp"

namespace hycast {

namespace {

bool recording_for(const Tensor& a) {
  return Tape::active().recording() && a.requires_grad();
}

bool recording_for(const Tensor& a, const Tensor& b) {
  return Tape::active().recording() &&
         (a.requires_grad() || b.requires_grad());
}

// Effective strides of `shape` aligned to a broadcast result of rank
// `out_rank`: broadcast (padded or size-1) axes get stride 0.
std::vector<std::size_t> effective_strides(const Shape& shape,
                                           const Shape& out_shape) {
  std::size_t out_rank = out_shape.size();
  std::vector<std::size_t> strides(out_rank, 0);
  auto own = row_major_strides(shape);
  std::size_t offset = out_rank - shape.size();
  for (std::size_t d = 0; d < shape.size(); ++d) {
    strides[offset + d] = (shape[d] == 1) ? 0 : own[d];
  }
  return strides;
}

// Visit every position of `out_shape`, handing the callback the flat output
// index plus the two aligned operand offsets.
template <typename F>
void for_each_broadcast(const Shape& out_shape,
                        const std::vector<std::size_t>& sa,
                        const std::vector<std::size_t>& sb, F&& f) {
  std::size_t rank = out_shape.size();
  std::size_t n = shape_numel(out_shape);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t i = 0;;) {
    f(i, oa, ob);
    if (++i == n) break;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < out_shape[d]) break;
      oa -= sa[d] * out_shape[d];
      ob -= sb[d] * out_shape[d];
      idx[d] = 0;
    }
  }
}

using BinaryFn = double (*)(double, double);

Tensor pointwise_binary(const char* name, const Tensor& a, const Tensor& b,
                        BinaryFn fwd, BinaryFn da_fn, BinaryFn db_fn) {
  Shape out_shape = broadcast_shapes(a.shape(), b.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(shape_numel(out_shape));

  bool same = a.shape() == b.shape();
  if (same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
  } else {
    auto sa = effective_strides(a.shape(), out_shape);
    auto sb = effective_strides(b.shape(), out_shape);
    for_each_broadcast(out_shape, sa, sb,
                       [&](std::size_t i, std::size_t oa, std::size_t ob) {
                         out[i] = fwd(av[oa], bv[ob]);
                       });
  }

  Tensor result(out_shape, std::move(out));
  if (recording_for(a, b)) {
    result.set_requires_grad(true);
    auto ai = a.impl();
    auto bi = b.impl();
    auto oi = result.impl();
    Shape oshape = out_shape;
    Tape::active().emit(
        {ai, bi}, oi,
        [ai, bi, oi, oshape, same, da_fn, db_fn]() {
          const auto& g = oi->grad;
          bool need_a = ai->requires_grad;
          bool need_b = bi->requires_grad;
          if (need_a) ai->ensure_grad();
          if (need_b) bi->ensure_grad();
          if (same) {
            for (std::size_t i = 0; i < g.size(); ++i) {
              if (need_a) ai->grad[i] += da_fn(ai->data[i], bi->data[i]) * g[i];
              if (need_b) bi->grad[i] += db_fn(ai->data[i], bi->data[i]) * g[i];
            }
          } else {
            auto sa = effective_strides(ai->shape, oshape);
            auto sb = effective_strides(bi->shape, oshape);
            for_each_broadcast(
                oshape, sa, sb,
                [&](std::size_t i, std::size_t oa, std::size_t ob) {
                  if (need_a)
                    ai->grad[oa] += da_fn(ai->data[oa], bi->data[ob]) * g[i];
                  if (need_b)
                    bi->grad[ob] += db_fn(ai->data[oa], bi->data[ob]) * g[i];
                });
          }
        },
        name);
  }
  return result;
}

Tensor pointwise_unary(const char* name, const Tensor& x,
                       const std::function<double(double)>& fwd,
                       const std::function<double(double, double)>& dfn) {
  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);

  Tensor result(x.shape(), std::move(out));
  if (recording_for(x)) {
    result.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = result.impl();
    Tape::active().emit(
        {xi}, oi,
        [xi, oi, dfn]() {
          const auto& g = oi->grad;
          xi->ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) {
            xi->grad[i] += dfn(xi->data[i], oi->data[i]) * g[i];
          }
        },
        name);
  }
  return result;
}

int normalize_axis(int axis, std::size_t rank, const char* op) {
  int r = static_cast<int>(rank);
  if (axis < -r || axis >= r) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for rank " + std::to_string(rank));
  }
  return axis < 0 ? axis + r : axis;
}

}  // namespace

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    std::size_t ea = d < rank - a.size() ? 1 : a[d - (rank - a.size())];
    std::size_t eb = d < rank - b.size() ? 1 : b[d - (rank - b.size())];
    if (ea != eb && ea != 1 && eb != 1) {
      throw DimensionError("shapes " + shape_to_string(a) + " and " +
                           shape_to_string(b) + " are not broadcastable");
    }
    out[d] = std::max(ea, eb);
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  return pointwise_binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return pointwise_binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return pointwise_binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return pointwise_binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Tensor add_scalar(const Tensor& a, double s) {
  return pointwise_unary(
      "add_scalar", a, [s](double x) { return x + s; },
      [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
  return pointwise_unary(
      "mul_scalar", a, [s](double x) { return x * s; },
      [s](double, double) { return s; });
}

Tensor relu(const Tensor& x) {
  // Subgradient at 0 taken as 0.
  return pointwise_unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return pointwise_unary(
      "sigmoid", x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return pointwise_unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& x) {
  return pointwise_unary(
      "exp", x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor silu(const Tensor& x) {
  return pointwise_unary(
      "silu", x,
      [](double v) { return v / (1.0 + std::exp(-v)); },
      [](double v, double) {
        double s = 1.0 / (1.0 + std::exp(-v));
        return s * (1.0 + v * (1.0 - s));
      });
}

Tensor sqrt(const Tensor& x) {
  return pointwise_unary(
      "sqrt", x, [](double v) { return std::sqrt(v); },
      [](double, double y) { return 0.5 / y; });
}

Tensor softmax(const Tensor& x, int axis) {
  std::size_t ax =
      static_cast<std::size_t>(normalize_axis(axis, x.rank(), "softmax"));
  const Shape& shape = x.shape();
  std::size_t axis_n = shape[ax];
  std::size_t inner = 1, outer = 1;
  for (std::size_t d = ax + 1; d < shape.size(); ++d) inner *= shape[d];
  for (std::size_t d = 0; d < ax; ++d) outer *= shape[d];

  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      std::size_t base = o * axis_n * inner + in;
      double mx = xv[base];
      for (std::size_t j = 1; j < axis_n; ++j) {
        mx = std::max(mx, xv[base + j * inner]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < axis_n; ++j) {
        double e = std::exp(xv[base + j * inner] - mx);
        out[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < axis_n; ++j) {
        out[base + j * inner] /= total;
      }
    }
  }

  Tensor result(shape, std::move(out));
  if (recording_for(x)) {
    result.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = result.impl();
    Tape::active().emit(
        {xi}, oi,
        [xi, oi, outer, inner, axis_n]() {
          const auto& g = oi->grad;
          const auto& y = oi->data;
          xi->ensure_grad();
          for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t in = 0; in < inner; ++in) {
              std::size_t base = o * axis_n * inner + in;
              double dot = 0.0;
              for (std::size_t j = 0; j < axis_n; ++j) {
                std::size_t p = base + j * inner;
                dot += g[p] * y[p];
              }
              for (std::size_t j = 0; j < axis_n; ++j) {
                std::size_t p = base + j * inner;
                xi->grad[p] += (g[p] - dot) * y[p];
              }
            }
          }
        },
        "softmax");
  }
  return result;
}

namespace {

// C(m,n) += A(m,k) * B(k,n), row-major.
void mm_accumulate(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = a + i * k;
    double* c_row = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      double av = a_row[kk];
      if (av == 0.0) continue;
      const double* b_row = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
  }
}

// dA(m,k) += G(m,n) * B(k,n)^T
void mm_grad_a(const double* g, const double* b, double* da, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* g_row = g + i * n;
    double* da_row = da + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double* b_row = b + kk * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += g_row[j] * b_row[j];
      da_row[kk] += s;
    }
  }
}

// dB(k,n) += A(m,k)^T * G(m,n)
void mm_grad_b(const double* a, const double* g, double* db, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = a + i * k;
    const double* g_row = g + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      double av = a_row[kk];
      if (av == 0.0) continue;
      double* db_row = db + kk * n;
      for (std::size_t j = 0; j < n; ++j) db_row[j] += av * g_row[j];
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) {
    throw DimensionError("matmul needs rank >= 2 operands, got " +
                         shape_to_string(sa) + " x " + shape_to_string(sb));
  }
  std::size_t m = sa[sa.size() - 2], k = sa[sa.size() - 1];
  std::size_t k2 = sb[sb.size() - 2], n = sb[sb.size() - 1];
  if (k != k2) {
    throw DimensionError("matmul inner extents differ: " + shape_to_string(sa) +
                         " x " + shape_to_string(sb));
  }
  Shape batch_a(sa.begin(), sa.end() - 2);
  Shape batch_b(sb.begin(), sb.end() - 2);
  Shape batch = broadcast_shapes(batch_a, batch_b);
  std::size_t batches = shape_numel(batch);

  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);

  auto stride_a = effective_strides(batch_a, batch);
  auto stride_b = effective_strides(batch_b, batch);

  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(batches * m * n, 0.0);

  std::vector<std::size_t> idx(batch.size(), 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t bi = 0;;) {
    mm_accumulate(av.data() + oa * m * k, bv.data() + ob * k * n,
                  out.data() + bi * m * n, m, k, n);
    if (++bi == batches) break;
    for (std::size_t d = batch.size(); d-- > 0;) {
      ++idx[d];
      oa += stride_a[d];
      ob += stride_b[d];
      if (idx[d] < batch[d]) break;
      oa -= stride_a[d] * batch[d];
      ob -= stride_b[d] * batch[d];
      idx[d] = 0;
    }
  }

  Tensor result(out_shape, std::move(out));
  if (recording_for(a, b)) {
    result.set_requires_grad(true);
    auto ai = a.impl();
    auto bimpl = b.impl();
    auto oi = result.impl();
    Tape::active().emit(
        {ai, bimpl}, oi,
        [ai, bimpl, oi, batch, stride_a, stride_b, batches, m, k, n]() {
          const auto& g = oi->grad;
          bool need_a = ai->requires_grad;
          bool need_b = bimpl->requires_grad;
          if (need_a) ai->ensure_grad();
          if (need_b) bimpl->ensure_grad();
          std::vector<std::size_t> idx(batch.size(), 0);
          std::size_t oa = 0, ob = 0;
          for (std::size_t bi = 0;;) {
            const double* g_mat = g.data() + bi * m * n;
            if (need_a) {
              mm_grad_a(g_mat, bimpl->data.data() + ob * k * n,
                        ai->grad.data() + oa * m * k, m, k, n);
            }
            if (need_b) {
              mm_grad_b(ai->data.data() + oa * m * k, g_mat,
                        bimpl->grad.data() + ob * k * n, m, k, n);
            }
            if (++bi == batches) break;
            for (std::size_t d = batch.size(); d-- > 0;) {
              ++idx[d];
              oa += stride_a[d];
              ob += stride_b[d];
              if (idx[d] < batch[d]) break;
              oa -= stride_a[d] * batch[d];
              ob -= stride_b[d] * batch[d];
              idx[d] = 0;
            }
          }
        },
        "matmul");
  }
  return result;
}

namespace {

struct ReducePlan {
  Shape out_shape;           // after optional squeeze
  Shape kept_shape;          // keepdims form, same rank as input
  std::vector<std::size_t> out_strides;  // aligned to input rank, 0 on reduced
  std::size_t count = 1;     // number of input elements per output element
};

ReducePlan make_reduce_plan(const Shape& in, std::vector<int> axes,
                            bool keepdims) {
  std::vector<bool> reduced(in.size(), false);
  if (axes.empty()) {
    std::fill(reduced.begin(), reduced.end(), true);
  } else {
    for (int ax : axes) {
      std::size_t a =
          static_cast<std::size_t>(normalize_axis(ax, in.size(), "reduce"));
      reduced[a] = true;
    }
  }
  ReducePlan plan;
  plan.kept_shape = in;
  for (std::size_t d = 0; d < in.size(); ++d) {
    if (reduced[d]) {
      plan.count *= in[d];
      plan.kept_shape[d] = 1;
    }
  }
  auto kept_strides = row_major_strides(plan.kept_shape);
  plan.out_strides.assign(in.size(), 0);
  for (std::size_t d = 0; d < in.size(); ++d) {
    if (!reduced[d] && in[d] != 1) plan.out_strides[d] = kept_strides[d];
  }
  if (keepdims) {
    plan.out_shape = plan.kept_shape;
  } else {
    for (std::size_t d = 0; d < in.size(); ++d) {
      if (!reduced[d]) plan.out_shape.push_back(in[d]);
    }
    if (plan.out_shape.empty()) plan.out_shape = {1};
  }
  return plan;
}

Tensor reduce_op(const Tensor& x, std::vector<int> axes, bool keepdims,
                 bool take_mean) {
  ReducePlan plan = make_reduce_plan(x.shape(), std::move(axes), keepdims);
  const auto& xv = x.values();
  std::vector<double> out(shape_numel(plan.out_shape), 0.0);

  const Shape& in_shape = x.shape();
  std::vector<std::size_t> idx(in_shape.size(), 0);
  std::size_t off = 0;
  for (std::size_t i = 0;;) {
    out[off] += xv[i];
    if (++i == xv.size()) break;
    for (std::size_t d = in_shape.size(); d-- > 0;) {
      ++idx[d];
      off += plan.out_strides[d];
      if (idx[d] < in_shape[d]) break;
      off -= plan.out_strides[d] * in_shape[d];
      idx[d] = 0;
    }
  }
  double scale = take_mean ? 1.0 / static_cast<double>(plan.count) : 1.0;
  if (take_mean) {
    for (double& v : out) v *= scale;
  }

  Tensor result(plan.out_shape, std::move(out));
  if (recording_for(x)) {
    result.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = result.impl();
    auto strides = plan.out_strides;
    Shape in_copy = in_shape;
    Tape::active().emit(
        {xi}, oi,
        [xi, oi, strides, in_copy, scale]() {
          const auto& g = oi->grad;
          xi->ensure_grad();
          std::vector<std::size_t> idx(in_copy.size(), 0);
          std::size_t off = 0;
          for (std::size_t i = 0;;) {
            xi->grad[i] += g[off] * scale;
            if (++i == xi->data.size()) break;
            for (std::size_t d = in_copy.size(); d-- > 0;) {
              ++idx[d];
              off += strides[d];
              if (idx[d] < in_copy[d]) break;
              off -= strides[d] * in_copy[d];
              idx[d] = 0;
            }
          }
        },
        take_mean ? "mean" : "sum");
  }
  return result;
}

}  // namespace

Tensor sum(const Tensor& x) { return reduce_op(x, {}, false, false); }

Tensor sum(const Tensor& x, std::vector<int> axes, bool keepdims) {
  return reduce_op(x, std::move(axes), keepdims, false);
}

Tensor mean(const Tensor& x) { return reduce_op(x, {}, false, true); }

Tensor mean(const Tensor& x, std::vector<int> axes, bool keepdims) {
  return reduce_op(x, std::move(axes), keepdims, true);
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& order) {
  const Shape& in_shape = x.shape();
  if (order.size() != in_shape.size()) {
    throw DimensionError("permute order rank " + std::to_string(order.size()) +
                         " does not match tensor rank " +
                         std::to_string(in_shape.size()));
  }
  std::vector<bool> seen(order.size(), false);
  for (std::size_t d : order) {
    if (d >= order.size() || seen[d]) {
      throw DimensionError("permute order is not a permutation");
    }
    seen[d] = true;
  }

  Shape out_shape(order.size());
  for (std::size_t d = 0; d < order.size(); ++d) out_shape[d] = in_shape[order[d]];
  auto in_strides = row_major_strides(in_shape);
  std::vector<std::size_t> mapped(order.size());
  for (std::size_t d = 0; d < order.size(); ++d) mapped[d] = in_strides[order[d]];

  const auto& xv = x.values();
  std::vector<double> out(xv.size());
  std::vector<std::size_t> idx(out_shape.size(), 0);
  std::size_t src = 0;
  for (std::size_t i = 0;;) {
    out[i] = xv[src];
    if (++i == out.size()) break;
    for (std::size_t d = out_shape.size(); d-- > 0;) {
      ++idx[d];
      src += mapped[d];
      if (idx[d] < out_shape[d]) break;
      src -= mapped[d] * out_shape[d];
      idx[d] = 0;
    }
  }

  Tensor result(out_shape, std::move(out));
  if (recording_for(x)) {
    result.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = result.impl();
    Tape::active().emit(
        {xi}, oi,
        [xi, oi, mapped, out_shape]() {
          const auto& g = oi->grad;
          xi->ensure_grad();
          std::vector<std::size_t> idx(out_shape.size(), 0);
          std::size_t src = 0;
          for (std::size_t i = 0;;) {
            xi->grad[src] += g[i];
            if (++i == g.size()) break;
            for (std::size_t d = out_shape.size(); d-- > 0;) {
              ++idx[d];
              src += mapped[d];
              if (idx[d] < out_shape[d]) break;
              src -= mapped[d] * out_shape[d];
              idx[d] = 0;
            }
          }
        },
        "permute");
  }
  return result;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.size()) {
    throw DimensionError("cannot reshape " + shape_to_string(x.shape()) +
                         " into " + shape_to_string(shape));
  }
  Tensor result(std::move(shape), x.values());
  if (recording_for(x)) {
    result.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = result.impl();
    Tape::active().emit(
        {xi}, oi,
        [xi, oi]() {
          xi->ensure_grad();
          const auto& g = oi->grad;
          for (std::size_t i = 0; i < g.size(); ++i) xi->grad[i] += g[i];
        },
        "reshape");
  }
  return result;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) {
    throw DimensionError("concat axis " + std::to_string(axis) +
                         " out of range for rank " +
                         std::to_string(first.size()));
  }
  Shape out_shape = first;
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const Shape& s = parts[p].shape();
    if (s.size() != first.size()) {
      throw DimensionError("concat rank mismatch");
    }
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) {
        throw DimensionError("concat extents differ off-axis: " +
                             shape_to_string(first) + " vs " +
                             shape_to_string(s));
      }
    }
    out_shape[axis] += s[axis];
  }

  std::size_t inner = 1, outer = 1;
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];

  std::vector<double> out(shape_numel(out_shape));
  std::size_t out_row = out_shape[axis] * inner;
  std::size_t col = 0;
  std::vector<std::size_t> offsets(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) {
    offsets[p] = col;
    std::size_t block = parts[p].shape()[axis] * inner;
    const auto& pv = parts[p].values();
    for (std::size_t o = 0; o < outer; ++o) {
      std::memcpy(out.data() + o * out_row + col, pv.data() + o * block,
                  block * sizeof(double));
    }
    col += block;
  }

  Tensor result(out_shape, std::move(out));
  bool rec = Tape::active().recording() &&
             std::any_of(parts.begin(), parts.end(),
                         [](const Tensor& t) { return t.requires_grad(); });
  if (rec) {
    result.set_requires_grad(true);
    std::vector<std::shared_ptr<TensorImpl>> impls;
    impls.reserve(parts.size());
    std::vector<std::size_t> blocks(parts.size());
    for (std::size_t p = 0; p < parts.size(); ++p) {
      impls.push_back(parts[p].impl());
      blocks[p] = parts[p].shape()[axis] * inner;
    }
    auto oi = result.impl();
    Tape::active().emit(
        std::vector<std::shared_ptr<TensorImpl>>(impls), oi,
        [impls, oi, blocks, offsets, outer, out_row]() {
          const auto& g = oi->grad;
          for (std::size_t p = 0; p < impls.size(); ++p) {
            if (!impls[p]->requires_grad) continue;
            impls[p]->ensure_grad();
            for (std::size_t o = 0; o < outer; ++o) {
              const double* src = g.data() + o * out_row + offsets[p];
              double* dst = impls[p]->grad.data() + o * blocks[p];
              for (std::size_t i = 0; i < blocks[p]; ++i) dst[i] += src[i];
            }
          }
        },
        "concat");
  }
  return result;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start,
             std::size_t length) {
  const Shape& in_shape = x.shape();
  if (axis >= in_shape.size()) {
    throw DimensionError("slice axis " + std::to_string(axis) +
                         " out of range for rank " +
                         std::to_string(in_shape.size()));
  }
  if (length == 0 || start + length > in_shape[axis]) {
    throw DimensionError("slice [" + std::to_string(start) + ", " +
                         std::to_string(start + length) +
                         ") out of range on axis " + std::to_string(axis) +
                         " of " + shape_to_string(in_shape));
  }
  std::size_t inner = 1, outer = 1;
  for (std::size_t d = axis + 1; d < in_shape.size(); ++d) inner *= in_shape[d];
  for (std::size_t d = 0; d < axis; ++d) outer *= in_shape[d];

  Shape out_shape = in_shape;
  out_shape[axis] = length;
  std::size_t in_row = in_shape[axis] * inner;
  std::size_t out_row = length * inner;

  const auto& xv = x.values();
  std::vector<double> out(shape_numel(out_shape));
  for (std::size_t o = 0; o < outer; ++o) {
    std::memcpy(out.data() + o * out_row, xv.data() + o * in_row + start * inner,
                out_row * sizeof(double));
  }

  Tensor result(out_shape, std::move(out));
  if (recording_for(x)) {
    result.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = result.impl();
    Tape::active().emit(
        {xi}, oi,
        [xi, oi, outer, in_row, out_row, start, inner]() {
          const auto& g = oi->grad;
          xi->ensure_grad();
          for (std::size_t o = 0; o < outer; ++o) {
            const double* src = g.data() + o * out_row;
            double* dst = xi->grad.data() + o * in_row + start * inner;
            for (std::size_t i = 0; i < out_row; ++i) dst[i] += src[i];
          }
        },
        "slice");
  }
  return result;
}

}  // namespace hycast
