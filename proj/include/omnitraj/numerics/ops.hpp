// Copyright 2026 The OmniTraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OMNITRAJ__NUMERICS__OPS_HPP_
#define OMNITRAJ__NUMERICS__OPS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "omnitraj/numerics/tape.hpp"
#include "omnitraj/numerics/tensor.hpp"

// Differentiable tensor operations. Every op records its result on the tape of its inputs
// and registers the adjoint. Broadcasting is limited to leading batch dimensions of matmul;
// everything else requires exactly matching shapes.

namespace omnitraj::numerics
{

/// Logits at or below this value are treated as -inf by softmax and attention.
inline constexpr double kMaskedLogit = -1e30;

namespace detail
{

inline Tape & same_tape(Var a, Var b)
{
  if (!a.valid() || !b.valid() || a.tape != b.tape) {
    throw ContractError("operands recorded on different tapes");
  }
  return *a.tape;
}

inline void require_same_shape(const char * op, const Tensor & a, const Tensor & b)
{
  if (a.shape() != b.shape()) {
    throw ShapeError(
      std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

inline void accumulate(Tape & t, std::int32_t id, const std::vector<double> & g, double scale = 1.0)
{
  if (!t.requires_grad(id)) {
    return;
  }
  auto & dst = t.grad(id);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] += scale * g[i];
  }
}

inline std::int64_t last_dim(const Shape & s, const char * op)
{
  if (s.empty()) {
    throw ShapeError(std::string(op) + ": expected at least rank 1");
  }
  return s.back();
}

}  // namespace detail

inline Var add(Var a, Var b)
{
  Tape & t = detail::same_tape(a, b);
  detail::require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  const auto & bv = b.value().values();
  for (std::size_t i = 0; i < bv.size(); ++i) {
    out[i] += bv[i];
  }
  return t.record(std::move(out), {a, b}, [a, b](Tape & tp, std::int32_t self) {
    const auto & g = tp.grad(self);
    detail::accumulate(tp, a.id, g);
    detail::accumulate(tp, b.id, g);
  });
}

inline Var sub(Var a, Var b)
{
  Tape & t = detail::same_tape(a, b);
  detail::require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  const auto & bv = b.value().values();
  for (std::size_t i = 0; i < bv.size(); ++i) {
    out[i] -= bv[i];
  }
  return t.record(std::move(out), {a, b}, [a, b](Tape & tp, std::int32_t self) {
    const auto & g = tp.grad(self);
    detail::accumulate(tp, a.id, g);
    detail::accumulate(tp, b.id, g, -1.0);
  });
}

/// Elementwise product.
inline Var mul(Var a, Var b)
{
  Tape & t = detail::same_tape(a, b);
  detail::require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  const auto & bv = b.value().values();
  for (std::size_t i = 0; i < bv.size(); ++i) {
    out[i] *= bv[i];
  }
  return t.record(std::move(out), {a, b}, [a, b](Tape & tp, std::int32_t self) {
    const auto & g = tp.grad(self);
    const auto & av = tp.value(a.id).values();
    const auto & bv2 = tp.value(b.id).values();
    if (tp.requires_grad(a.id)) {
      auto & ga = tp.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * bv2[i];
      }
    }
    if (tp.requires_grad(b.id)) {
      auto & gb = tp.grad(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) {
        gb[i] += g[i] * av[i];
      }
    }
  });
}

inline Var scale(Var a, double s)
{
  Tensor out = a.value();
  for (auto & v : out.values()) {
    v *= s;
  }
  return a.tape->record(std::move(out), {a}, [a, s](Tape & tp, std::int32_t self) {
    detail::accumulate(tp, a.id, tp.grad(self), s);
  });
}

inline Var square(Var a)
{
  Tensor out = a.value();
  for (auto & v : out.values()) {
    v *= v;
  }
  return a.tape->record(std::move(out), {a}, [a](Tape & tp, std::int32_t self) {
    if (!tp.requires_grad(a.id)) {
      return;
    }
    const auto & g = tp.grad(self);
    const auto & av = tp.value(a.id).values();
    auto & ga = tp.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += 2.0 * av[i] * g[i];
    }
  });
}

inline Var reshape(Var a, Shape shape)
{
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape->record(std::move(out), {a}, [a](Tape & tp, std::int32_t self) {
    detail::accumulate(tp, a.id, tp.grad(self));
  });
}

/// Sum of all elements, shape [].
inline Var sum(Var a)
{
  double s = 0.0;
  for (double v : a.value().values()) {
    s += v;
  }
  return a.tape->record(Tensor::scalar(s), {a}, [a](Tape & tp, std::int32_t self) {
    if (!tp.requires_grad(a.id)) {
      return;
    }
    const double g = tp.grad(self)[0];
    for (auto & v : tp.grad(a.id)) {
      v += g;
    }
  });
}

inline Var mean(Var a)
{
  const auto n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

/// Sum over the last axis; [..., n] -> [...].
inline Var sum_last(Var a)
{
  const Shape & s = a.value().shape();
  const std::int64_t n = detail::last_dim(s, "sum_last");
  Shape os(s.begin(), s.end() - 1);
  Tensor out(os);
  const auto & av = a.value().values();
  for (std::int64_t r = 0; r < out.size(); ++r) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      acc += av[r * n + j];
    }
    out[r] = acc;
  }
  return a.tape->record(std::move(out), {a}, [a, n](Tape & tp, std::int32_t self) {
    if (!tp.requires_grad(a.id)) {
      return;
    }
    const auto & g = tp.grad(self);
    auto & ga = tp.grad(a.id);
    for (std::size_t r = 0; r < g.size(); ++r) {
      for (std::int64_t j = 0; j < n; ++j) {
        ga[r * n + j] += g[r];
      }
    }
  });
}

/// Minimum over the last axis; [..., n] -> [...]. The gradient flows to the first minimizer.
inline Var min_last(Var a)
{
  const Shape & s = a.value().shape();
  const std::int64_t n = detail::last_dim(s, "min_last");
  if (n == 0) {
    throw ShapeError("min_last: empty last axis");
  }
  Shape os(s.begin(), s.end() - 1);
  Tensor out(os);
  std::vector<std::int64_t> arg(static_cast<std::size_t>(out.size()));
  const auto & av = a.value().values();
  for (std::int64_t r = 0; r < out.size(); ++r) {
    std::int64_t best = 0;
    for (std::int64_t j = 1; j < n; ++j) {
      if (av[r * n + j] < av[r * n + best]) {
        best = j;
      }
    }
    arg[r] = best;
    out[r] = av[r * n + best];
  }
  return a.tape->record(
    std::move(out), {a}, [a, n, arg = std::move(arg)](Tape & tp, std::int32_t self) {
      if (!tp.requires_grad(a.id)) {
        return;
      }
      const auto & g = tp.grad(self);
      auto & ga = tp.grad(a.id);
      for (std::size_t r = 0; r < g.size(); ++r) {
        ga[r * n + arg[r]] += g[r];
      }
    });
}

/**
 * Batched matrix product over the last two axes: [..., m, k] x [..., k, n] -> [..., m, n].
 * Leading batch dimensions must be identical, or one operand may be a plain matrix that is
 * broadcast over the other's batch.
 */
inline Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false)
{
  Tape & t = detail::same_tape(a, b);
  const Shape & sa = a.value().shape();
  const Shape & sb = b.value().shape();
  if (sa.size() < 2 || sb.size() < 2) {
    throw ShapeError(
      "matmul: operands must have rank >= 2, got " + shape_str(sa) + " and " + shape_str(sb));
  }
  const std::int64_t m = trans_a ? sa[sa.size() - 1] : sa[sa.size() - 2];
  const std::int64_t ka = trans_a ? sa[sa.size() - 2] : sa[sa.size() - 1];
  const std::int64_t kb = trans_b ? sb[sb.size() - 1] : sb[sb.size() - 2];
  const std::int64_t n = trans_b ? sb[sb.size() - 2] : sb[sb.size() - 1];
  const Shape batch_a(sa.begin(), sa.end() - 2);
  const Shape batch_b(sb.begin(), sb.end() - 2);
  if (ka != kb || (!batch_a.empty() && !batch_b.empty() && batch_a != batch_b)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(sa) + " and " + shape_str(sb));
  }
  const Shape & batch = batch_a.empty() ? batch_b : batch_a;
  const std::int64_t nb = numel(batch);
  const std::int64_t stride_a = batch_a.empty() ? 0 : m * ka;
  const std::int64_t stride_b = batch_b.empty() ? 0 : ka * n;
  Shape os = batch;
  os.push_back(m);
  os.push_back(n);
  Tensor out(os);
  for (std::int64_t i = 0; i < nb; ++i) {
    kernels::gemm(
      trans_a, trans_b, m, n, ka, a.value().data() + i * stride_a,
      b.value().data() + i * stride_b, out.data() + i * m * n, false);
  }
  const std::int64_t k = ka;
  return t.record(
    std::move(out), {a, b},
    [a, b, trans_a, trans_b, m, n, k, nb, stride_a, stride_b](Tape & tp, std::int32_t self) {
      const auto & g = tp.grad(self);
      const double * av = tp.value(a.id).data();
      const double * bv = tp.value(b.id).data();
      if (tp.requires_grad(a.id)) {
        double * ga = tp.grad(a.id).data();
        for (std::int64_t i = 0; i < nb; ++i) {
          const double * gi = g.data() + i * m * n;
          const double * bi = bv + i * stride_b;
          double * gai = ga + i * stride_a;
          if (!trans_a) {
            kernels::gemm(false, !trans_b, m, k, n, gi, bi, gai, true);
          } else {
            kernels::gemm(trans_b, true, k, m, n, bi, gi, gai, true);
          }
        }
      }
      if (tp.requires_grad(b.id)) {
        double * gb = tp.grad(b.id).data();
        for (std::int64_t i = 0; i < nb; ++i) {
          const double * gi = g.data() + i * m * n;
          const double * ai = av + i * stride_a;
          double * gbi = gb + i * stride_b;
          if (!trans_b) {
            kernels::gemm(!trans_a, false, k, n, m, ai, gi, gbi, true);
          } else {
            kernels::gemm(true, trans_a, n, k, m, gi, ai, gbi, true);
          }
        }
      }
    });
}

/// Affine map over the last axis: x [..., in] * W [in, out] + b [out].
inline Var linear(Var x, Var w, Var b)
{
  Tape & t = detail::same_tape(x, w);
  const Shape & sx = x.value().shape();
  const Shape & sw = w.value().shape();
  const std::int64_t in = detail::last_dim(sx, "linear");
  if (sw.size() != 2 || sw[0] != in || (b.valid() && b.value().shape() != Shape{sw[1]})) {
    throw ShapeError(
      "linear: input " + shape_str(sx) + " incompatible with weight " + shape_str(sw) +
      (b.valid() ? " and bias " + shape_str(b.value().shape()) : std::string()));
  }
  const std::int64_t out_dim = sw[1];
  const std::int64_t rows = in == 0 ? 0 : x.value().size() / in;
  Shape os = sx;
  os.back() = out_dim;
  Tensor out(os);
  kernels::gemm(false, false, rows, out_dim, in, x.value().data(), w.value().data(), out.data(), false);
  if (b.valid()) {
    const double * bv = b.value().data();
    for (std::int64_t r = 0; r < rows; ++r) {
      double * row = out.data() + r * out_dim;
      for (std::int64_t j = 0; j < out_dim; ++j) {
        row[j] += bv[j];
      }
    }
  }
  std::vector<Var> parents{x, w};
  if (b.valid()) {
    parents.push_back(b);
  }
  return t.record(
    std::move(out), parents, [x, w, b, rows, in, out_dim](Tape & tp, std::int32_t self) {
      const auto & g = tp.grad(self);
      if (tp.requires_grad(x.id)) {
        kernels::gemm(
          false, true, rows, in, out_dim, g.data(), tp.value(w.id).data(), tp.grad(x.id).data(),
          true);
      }
      if (tp.requires_grad(w.id)) {
        kernels::gemm(
          true, false, in, out_dim, rows, tp.value(x.id).data(), g.data(), tp.grad(w.id).data(),
          true);
      }
      if (b.valid() && tp.requires_grad(b.id)) {
        auto & gb = tp.grad(b.id);
        for (std::int64_t r = 0; r < rows; ++r) {
          for (std::int64_t j = 0; j < out_dim; ++j) {
            gb[j] += g[r * out_dim + j];
          }
        }
      }
    });
}

inline Var linear(Var x, Var w) { return linear(x, w, Var{}); }

/// Exact (erf-based) GELU.
inline Var gelu(Var a)
{
  Tensor out = a.value();
  for (auto & v : out.values()) {
    v = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  }
  return a.tape->record(std::move(out), {a}, [a](Tape & tp, std::int32_t self) {
    if (!tp.requires_grad(a.id)) {
      return;
    }
    const auto & g = tp.grad(self);
    const auto & av = tp.value(a.id).values();
    auto & ga = tp.grad(a.id);
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = av[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
      ga[i] += g[i] * (cdf + x * pdf);
    }
  });
}

/// Layer normalization over the last axis with learned gain and bias of shape [d].
inline Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5)
{
  Tape & t = detail::same_tape(x, gain);
  const std::int64_t d = detail::last_dim(x.value().shape(), "layer_norm");
  if (gain.value().shape() != Shape{d} || bias.value().shape() != Shape{d}) {
    throw ShapeError(
      "layer_norm: gain/bias " + shape_str(gain.value().shape()) + " do not match input " +
      shape_str(x.value().shape()));
  }
  const std::int64_t rows = d == 0 ? 0 : x.value().size() / d;
  Tensor out(x.value().shape());
  std::vector<double> xhat(static_cast<std::size_t>(x.value().size()));
  std::vector<double> inv_std(static_cast<std::size_t>(rows));
  const double * xv = x.value().data();
  const double * gv = gain.value().data();
  const double * bv = bias.value().data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const double * row = xv + r * d;
    double mu = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      mu += row[j];
    }
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      const double c = row[j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::int64_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * is;
      xhat[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  return t.record(
    std::move(out), {x, gain, bias},
    [x, gain, bias, d, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](
      Tape & tp, std::int32_t self) {
      const auto & g = tp.grad(self);
      const double * gv2 = tp.value(gain.id).data();
      if (tp.requires_grad(gain.id) || tp.requires_grad(bias.id)) {
        auto & gg = tp.grad(gain.id);
        auto & gb = tp.grad(bias.id);
        for (std::int64_t r = 0; r < rows; ++r) {
          for (std::int64_t j = 0; j < d; ++j) {
            gg[j] += g[r * d + j] * xhat[r * d + j];
            gb[j] += g[r * d + j];
          }
        }
      }
      if (tp.requires_grad(x.id)) {
        auto & gx = tp.grad(x.id);
        std::vector<double> dh(static_cast<std::size_t>(d));
        for (std::int64_t r = 0; r < rows; ++r) {
          double m1 = 0.0;
          double m2 = 0.0;
          for (std::int64_t j = 0; j < d; ++j) {
            dh[j] = g[r * d + j] * gv2[j];
            m1 += dh[j];
            m2 += dh[j] * xhat[r * d + j];
          }
          m1 /= static_cast<double>(d);
          m2 /= static_cast<double>(d);
          for (std::int64_t j = 0; j < d; ++j) {
            gx[r * d + j] += inv_std[r] * (dh[j] - m1 - xhat[r * d + j] * m2);
          }
        }
      }
    });
}

/**
 * Softmax over the last axis with max-subtraction. Positions whose logit is <= kMaskedLogit
 * (including -inf), or whose entry in `keep` is 0, get exactly 0. A row with no surviving
 * position is all zeros.
 */
inline Var softmax(Var a, const std::vector<std::uint8_t> & keep = {})
{
  const std::int64_t n = detail::last_dim(a.value().shape(), "softmax");
  if (!keep.empty() && static_cast<std::int64_t>(keep.size()) != a.value().size()) {
    throw ShapeError("softmax: mask size does not match input " + shape_str(a.value().shape()));
  }
  Tensor out(a.value().shape());
  const auto & av = a.value().values();
  const std::int64_t rows = n == 0 ? 0 : a.value().size() / n;
  for (std::int64_t r = 0; r < rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::int64_t j = 0; j < n; ++j) {
      const auto i = static_cast<std::size_t>(r * n + j);
      if ((keep.empty() || keep[i]) && av[i] > kMaskedLogit) {
        mx = std::max(mx, av[i]);
        any = true;
      }
    }
    if (!any) {
      continue;
    }
    double z = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      const auto i = static_cast<std::size_t>(r * n + j);
      if ((keep.empty() || keep[i]) && av[i] > kMaskedLogit) {
        out[i] = std::exp(av[i] - mx);
        z += out[i];
      }
    }
    for (std::int64_t j = 0; j < n; ++j) {
      out[r * n + j] /= z;
    }
  }
  return a.tape->record(std::move(out), {a}, [a, n, rows](Tape & tp, std::int32_t self) {
    if (!tp.requires_grad(a.id)) {
      return;
    }
    const auto & g = tp.grad(self);
    const auto & y = tp.value(self).values();
    auto & ga = tp.grad(a.id);
    for (std::int64_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::int64_t j = 0; j < n; ++j) {
        dot += g[r * n + j] * y[r * n + j];
      }
      for (std::int64_t j = 0; j < n; ++j) {
        ga[r * n + j] += y[r * n + j] * (g[r * n + j] - dot);
      }
    }
  });
}

/**
 * @brief Key visibility for attention.
 *
 * Either empty (everything visible), per key [groups x k_len], or per query-key pair
 * [groups x q_len x k_len]. Nonzero means visible.
 */
struct AttnMask
{
  std::vector<std::uint8_t> visible;
  bool per_query = false;

  static AttnMask keys(std::vector<std::uint8_t> v) { return AttnMask{std::move(v), false}; }
  static AttnMask pairs(std::vector<std::uint8_t> v) { return AttnMask{std::move(v), true}; }
};

/**
 * Multi-head scaled dot-product attention core over grouped sequences.
 *
 * q [G, Lq, D], k [G, Lk, D], v [G, Lk, D]; heads split D into n_heads contiguous slices.
 * Masked keys are excluded before the softmax and receive exactly zero weight; a query with
 * no visible key outputs zeros.
 */
inline Var attention(Var q, Var k, Var v, std::int64_t n_heads, const AttnMask & mask = {})
{
  Tape & t = detail::same_tape(q, k);
  detail::same_tape(k, v);
  const Shape & sq = q.value().shape();
  const Shape & sk = k.value().shape();
  if (sq.size() != 3 || sk.size() != 3 || v.value().shape() != sk || sq[0] != sk[0] ||
      sq[2] != sk[2]) {
    throw ShapeError(
      "attention: incompatible q/k/v shapes " + shape_str(sq) + ", " + shape_str(sk) + ", " +
      shape_str(v.value().shape()));
  }
  const std::int64_t groups = sq[0];
  const std::int64_t lq = sq[1];
  const std::int64_t lk = sk[1];
  const std::int64_t d = sq[2];
  if (n_heads <= 0 || d % n_heads != 0) {
    throw ConfigError(
      "attention: model dim " + std::to_string(d) + " not divisible by " +
      std::to_string(n_heads) + " heads");
  }
  const std::int64_t expected = mask.per_query ? groups * lq * lk : groups * lk;
  if (!mask.visible.empty() && static_cast<std::int64_t>(mask.visible.size()) != expected) {
    throw ShapeError("attention: mask size does not broadcast to [heads, q_len, k_len]");
  }
  const std::int64_t dh = d / n_heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  auto visible = [&mask, lq, lk](std::int64_t g, std::int64_t i, std::int64_t j) {
    if (mask.visible.empty()) {
      return true;
    }
    return mask.per_query ? mask.visible[(g * lq + i) * lk + j] != 0
                          : mask.visible[g * lk + j] != 0;
  };

  const double * qv = q.value().data();
  const double * kv = k.value().data();
  const double * vv = v.value().data();
  Tensor out(sq);
  // probs[g][h][i][j]
  std::vector<double> probs(static_cast<std::size_t>(groups * n_heads * lq * lk), 0.0);
  std::vector<double> scores(static_cast<std::size_t>(lk));
  for (std::int64_t g = 0; g < groups; ++g) {
    for (std::int64_t h = 0; h < n_heads; ++h) {
      for (std::int64_t i = 0; i < lq; ++i) {
        const double * qi = qv + (g * lq + i) * d + h * dh;
        double mx = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::int64_t j = 0; j < lk; ++j) {
          if (!visible(g, i, j)) {
            continue;
          }
          const double * kj = kv + (g * lk + j) * d + h * dh;
          double s = 0.0;
          for (std::int64_t c = 0; c < dh; ++c) {
            s += qi[c] * kj[c];
          }
          s *= inv;
          scores[j] = s;
          mx = std::max(mx, s);
          any = true;
        }
        if (!any) {
          continue;
        }
        double * p = probs.data() + ((g * n_heads + h) * lq + i) * lk;
        double z = 0.0;
        for (std::int64_t j = 0; j < lk; ++j) {
          if (visible(g, i, j)) {
            p[j] = std::exp(scores[j] - mx);
            z += p[j];
          }
        }
        double * oi = out.data() + (g * lq + i) * d + h * dh;
        for (std::int64_t j = 0; j < lk; ++j) {
          if (p[j] == 0.0) {
            continue;
          }
          p[j] /= z;
          const double * vj = vv + (g * lk + j) * d + h * dh;
          for (std::int64_t c = 0; c < dh; ++c) {
            oi[c] += p[j] * vj[c];
          }
        }
      }
    }
  }
  return t.record(
    std::move(out), {q, k, v},
    [q, k, v, groups, n_heads, lq, lk, d, dh, inv, probs = std::move(probs)](
      Tape & tp, std::int32_t self) {
      const auto & g = tp.grad(self);
      const double * qv2 = tp.value(q.id).data();
      const double * kv2 = tp.value(k.id).data();
      const double * vv2 = tp.value(v.id).data();
      const bool need_q = tp.requires_grad(q.id);
      const bool need_k = tp.requires_grad(k.id);
      const bool need_v = tp.requires_grad(v.id);
      double * gq = need_q ? tp.grad(q.id).data() : nullptr;
      double * gk = need_k ? tp.grad(k.id).data() : nullptr;
      double * gv = need_v ? tp.grad(v.id).data() : nullptr;
      std::vector<double> dp(static_cast<std::size_t>(lk));
      for (std::int64_t gi = 0; gi < groups; ++gi) {
        for (std::int64_t h = 0; h < n_heads; ++h) {
          for (std::int64_t i = 0; i < lq; ++i) {
            const double * p = probs.data() + ((gi * n_heads + h) * lq + i) * lk;
            const double * go = g.data() + (gi * lq + i) * d + h * dh;
            double dot = 0.0;
            for (std::int64_t j = 0; j < lk; ++j) {
              dp[j] = 0.0;
              if (p[j] == 0.0) {
                continue;
              }
              const double * vj = vv2 + (gi * lk + j) * d + h * dh;
              double s = 0.0;
              for (std::int64_t c = 0; c < dh; ++c) {
                s += go[c] * vj[c];
              }
              dp[j] = s;
              dot += p[j] * s;
              if (need_v) {
                double * gvj = gv + (gi * lk + j) * d + h * dh;
                for (std::int64_t c = 0; c < dh; ++c) {
                  gvj[c] += p[j] * go[c];
                }
              }
            }
            const double * qi = qv2 + (gi * lq + i) * d + h * dh;
            double * gqi = need_q ? gq + (gi * lq + i) * d + h * dh : nullptr;
            for (std::int64_t j = 0; j < lk; ++j) {
              if (p[j] == 0.0) {
                continue;
              }
              const double ds = p[j] * (dp[j] - dot) * inv;
              const double * kj = kv2 + (gi * lk + j) * d + h * dh;
              if (need_q) {
                for (std::int64_t c = 0; c < dh; ++c) {
                  gqi[c] += ds * kj[c];
                }
              }
              if (need_k) {
                double * gkj = gk + (gi * lk + j) * d + h * dh;
                for (std::int64_t c = 0; c < dh; ++c) {
                  gkj[c] += ds * qi[c];
                }
              }
            }
          }
        }
      }
    });
}

/**
 * Row gather: treats x as [N, rest...] and returns [idx.size(), rest...]. Index -1 yields a
 * zero row. The adjoint scatter-adds into the source rows.
 */
inline Var gather_rows(Var x, const std::vector<std::int64_t> & idx)
{
  const Shape & sx = x.value().shape();
  if (sx.empty()) {
    throw ShapeError("gather_rows: scalar input");
  }
  const std::int64_t n = sx[0];
  const std::int64_t w = n == 0 ? numel(Shape(sx.begin() + 1, sx.end())) : x.value().size() / n;
  Shape os = sx;
  os[0] = static_cast<std::int64_t>(idx.size());
  Tensor out(os);
  const double * xv = x.value().data();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const std::int64_t src = idx[r];
    if (src < 0) {
      continue;
    }
    if (src >= n) {
      throw ShapeError(
        "gather_rows: index " + std::to_string(src) + " out of range for " + shape_str(sx));
    }
    std::copy(xv + src * w, xv + (src + 1) * w, out.data() + static_cast<std::int64_t>(r) * w);
  }
  return x.tape->record(std::move(out), {x}, [x, idx, w](Tape & tp, std::int32_t self) {
    if (!tp.requires_grad(x.id)) {
      return;
    }
    const auto & g = tp.grad(self);
    auto & gx = tp.grad(x.id);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] < 0) {
        continue;
      }
      const double * src = g.data() + static_cast<std::int64_t>(r) * w;
      double * dst = gx.data() + idx[r] * w;
      for (std::int64_t c = 0; c < w; ++c) {
        dst[c] += src[c];
      }
    }
  });
}

/// Concatenation along the first axis; trailing shapes must agree.
inline Var concat_rows(const std::vector<Var> & parts)
{
  if (parts.empty()) {
    throw ContractError("concat_rows: no inputs");
  }
  Tape & t = *parts.front().tape;
  Shape os = parts.front().value().shape();
  if (os.empty()) {
    throw ShapeError("concat_rows: scalar input");
  }
  os[0] = 0;
  for (const auto & p : parts) {
    detail::same_tape(parts.front(), p);
    const Shape & s = p.value().shape();
    if (s.size() != os.size() || !std::equal(s.begin() + 1, s.end(), os.begin() + 1)) {
      throw ShapeError(
        "concat_rows: trailing shape mismatch " + shape_str(s) + " vs " +
        shape_str(parts.front().value().shape()));
    }
    os[0] += s[0];
  }
  Tensor out(os);
  std::vector<std::int64_t> offsets;
  std::int64_t off = 0;
  for (const auto & p : parts) {
    offsets.push_back(off);
    std::copy(p.value().values().begin(), p.value().values().end(), out.data() + off);
    off += p.value().size();
  }
  return t.record(std::move(out), parts, [parts, offsets](Tape & tp, std::int32_t self) {
    const auto & g = tp.grad(self);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (!tp.requires_grad(parts[i].id)) {
        continue;
      }
      auto & gp = tp.grad(parts[i].id);
      for (std::size_t c = 0; c < gp.size(); ++c) {
        gp[c] += g[static_cast<std::size_t>(offsets[i]) + c];
      }
    }
  });
}

}  // namespace omnitraj::numerics

#endif  // OMNITRAJ__NUMERICS__OPS_HPP_
