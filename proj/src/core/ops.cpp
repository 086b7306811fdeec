// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>

#include "mptp/kernels/kernels.hpp"

namespace mptp::ops {
namespace {

constexpr double kPi = 3.14159265358979323846;

int64_t trailing(const Shape& s, size_t from) {
  int64_t n = 1;
  for (size_t i = from; i < s.size(); ++i) n *= s[i];
  return n;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Variable constant(Tensor t) { return Variable(std::move(t), false); }

Variable add(const Variable& a, const Variable& b) {
  check_same_shape(a.value(), b.value(), "add");
  const int64_t n = a.numel();
  Tensor out(a.shape());
  const double* pa = a.value().data();
  const double* pb = b.value().data();
  double* po = out.data();
#pragma omp parallel for simd schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
  Variable va = a, vb = b;
  return Variable::make_op(std::move(out), {a, b}, [va, vb](const Tensor& g) mutable {
    if (va.requires_grad()) va.accumulate_grad(g);
    if (vb.requires_grad()) vb.accumulate_grad(g);
  });
}

Variable sub(const Variable& a, const Variable& b) {
  check_same_shape(a.value(), b.value(), "sub");
  const int64_t n = a.numel();
  Tensor out(a.shape());
  const double* pa = a.value().data();
  const double* pb = b.value().data();
  double* po = out.data();
#pragma omp parallel for simd schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
  Variable va = a, vb = b;
  return Variable::make_op(std::move(out), {a, b}, [va, vb](const Tensor& g) mutable {
    if (va.requires_grad()) va.accumulate_grad(g);
    if (vb.requires_grad()) {
      Tensor db(g.shape());
      const double* pg = g.data();
      double* pd = db.data();
      const int64_t m = g.numel();
#pragma omp parallel for simd schedule(static)
      for (int64_t i = 0; i < m; ++i) pd[i] = -pg[i];
      vb.accumulate_grad(db);
    }
  });
}

Variable mul(const Variable& a, const Variable& b) {
  check_same_shape(a.value(), b.value(), "mul");
  const int64_t n = a.numel();
  Tensor out(a.shape());
  const double* pa = a.value().data();
  const double* pb = b.value().data();
  double* po = out.data();
#pragma omp parallel for simd schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
  Variable va = a, vb = b;
  return Variable::make_op(std::move(out), {a, b}, [va, vb](const Tensor& g) mutable {
    const int64_t m = g.numel();
    const double* pg = g.data();
    if (va.requires_grad()) {
      Tensor d(g.shape());
      double* pd = d.data();
      const double* pv = vb.value().data();
#pragma omp parallel for simd schedule(static)
      for (int64_t i = 0; i < m; ++i) pd[i] = pg[i] * pv[i];
      va.accumulate_grad(d);
    }
    if (vb.requires_grad()) {
      Tensor d(g.shape());
      double* pd = d.data();
      const double* pv = va.value().data();
#pragma omp parallel for simd schedule(static)
      for (int64_t i = 0; i < m; ++i) pd[i] = pg[i] * pv[i];
      vb.accumulate_grad(d);
    }
  });
}

Variable div(const Variable& a, const Variable& b) {
  check_same_shape(a.value(), b.value(), "div");
  const int64_t n = a.numel();
  Tensor out(a.shape());
  const double* pa = a.value().data();
  const double* pb = b.value().data();
  double* po = out.data();
#pragma omp parallel for simd schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] / pb[i];
  Variable va = a, vb = b;
  return Variable::make_op(std::move(out), {a, b}, [va, vb](const Tensor& g) mutable {
    const int64_t m = g.numel();
    const double* pg = g.data();
    const double* pav = va.value().data();
    const double* pbv = vb.value().data();
    if (va.requires_grad()) {
      Tensor d(g.shape());
      double* pd = d.data();
#pragma omp parallel for simd schedule(static)
      for (int64_t i = 0; i < m; ++i) pd[i] = pg[i] / pbv[i];
      va.accumulate_grad(d);
    }
    if (vb.requires_grad()) {
      Tensor d(g.shape());
      double* pd = d.data();
#pragma omp parallel for simd schedule(static)
      for (int64_t i = 0; i < m; ++i) pd[i] = -pg[i] * pav[i] / (pbv[i] * pbv[i]);
      vb.accumulate_grad(d);
    }
  });
}

Variable add_scalar(const Variable& a, double s) {
  const int64_t n = a.numel();
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
#pragma omp parallel for simd schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + s;
  Variable va = a;
  return Variable::make_op(std::move(out), {a}, [va](const Tensor& g) mutable {
    if (va.requires_grad()) va.accumulate_grad(g);
  });
}

Variable mul_scalar(const Variable& a, double s) {
  const int64_t n = a.numel();
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
#pragma omp parallel for simd schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * s;
  Variable va = a;
  return Variable::make_op(std::move(out), {a}, [va, s](const Tensor& g) mutable {
    if (!va.requires_grad()) return;
    Tensor d(g.shape());
    const double* pg = g.data();
    double* pd = d.data();
    const int64_t m = g.numel();
#pragma omp parallel for simd schedule(static)
    for (int64_t i = 0; i < m; ++i) pd[i] = pg[i] * s;
    va.accumulate_grad(d);
  });
}

Variable relu(const Variable& a) {
  const int64_t n = a.numel();
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
#pragma omp parallel for simd schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
  Variable va = a;
  return Variable::make_op(std::move(out), {a}, [va](const Tensor& g) mutable {
    if (!va.requires_grad()) return;
    Tensor d(g.shape());
    const double* pg = g.data();
    const double* px = va.value().data();
    double* pd = d.data();
    const int64_t m = g.numel();
#pragma omp parallel for simd schedule(static)
    for (int64_t i = 0; i < m; ++i) pd[i] = px[i] > 0.0 ? pg[i] : 0.0;
    va.accumulate_grad(d);
  });
}

Variable gelu(const Variable& a) {
  const int64_t n = a.numel();
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
  constexpr double inv_sqrt2 = 0.70710678118654752440;
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = 0.5 * pa[i] * (1.0 + std::erf(pa[i] * inv_sqrt2));
  Variable va = a;
  return Variable::make_op(std::move(out), {a}, [va](const Tensor& g) mutable {
    if (!va.requires_grad()) return;
    Tensor d(g.shape());
    const double* pg = g.data();
    const double* px = va.value().data();
    double* pd = d.data();
    const int64_t m = g.numel();
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * kPi);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < m; ++i) {
      const double x = px[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
      const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
      pd[i] = pg[i] * (cdf + x * pdf);
    }
    va.accumulate_grad(d);
  });
}

Variable sigmoid(const Variable& a) {
  const int64_t n = a.numel();
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = 1.0 / (1.0 + std::exp(-pa[i]));
  auto saved = std::make_shared<Tensor>(out);
  Variable va = a;
  return Variable::make_op(std::move(out), {a}, [va, saved](const Tensor& g) mutable {
    if (!va.requires_grad()) return;
    Tensor d(g.shape());
    const double* pg = g.data();
    const double* py = saved->data();
    double* pd = d.data();
    const int64_t m = g.numel();
#pragma omp parallel for simd schedule(static)
    for (int64_t i = 0; i < m; ++i) pd[i] = pg[i] * py[i] * (1.0 - py[i]);
    va.accumulate_grad(d);
  });
}

Variable log(const Variable& a) {
  const int64_t n = a.numel();
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = std::log(pa[i]);
  Variable va = a;
  return Variable::make_op(std::move(out), {a}, [va](const Tensor& g) mutable {
    if (!va.requires_grad()) return;
    Tensor d(g.shape());
    const double* pg = g.data();
    const double* px = va.value().data();
    double* pd = d.data();
    const int64_t m = g.numel();
#pragma omp parallel for simd schedule(static)
    for (int64_t i = 0; i < m; ++i) pd[i] = pg[i] / px[i];
    va.accumulate_grad(d);
  });
}

Variable sqrt(const Variable& a) {
  const int64_t n = a.numel();
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = std::sqrt(pa[i]);
  auto saved = std::make_shared<Tensor>(out);
  Variable va = a;
  return Variable::make_op(std::move(out), {a}, [va, saved](const Tensor& g) mutable {
    if (!va.requires_grad()) return;
    Tensor d(g.shape());
    const double* pg = g.data();
    const double* py = saved->data();
    double* pd = d.data();
    const int64_t m = g.numel();
#pragma omp parallel for simd schedule(static)
    for (int64_t i = 0; i < m; ++i) pd[i] = 0.5 * pg[i] / py[i];
    va.accumulate_grad(d);
  });
}

Variable clamp(const Variable& a, double lo, double hi) {
  const int64_t n = a.numel();
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
#pragma omp parallel for simd schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = std::min(hi, std::max(lo, pa[i]));
  Variable va = a;
  return Variable::make_op(std::move(out), {a}, [va, lo, hi](const Tensor& g) mutable {
    if (!va.requires_grad()) return;
    Tensor d(g.shape());
    const double* pg = g.data();
    const double* px = va.value().data();
    double* pd = d.data();
    const int64_t m = g.numel();
#pragma omp parallel for simd schedule(static)
    for (int64_t i = 0; i < m; ++i) pd[i] = (px[i] >= lo && px[i] <= hi) ? pg[i] : 0.0;
    va.accumulate_grad(d);
  });
}

Variable sum_all(const Variable& a) {
  Tensor out = Tensor::scalar(kernels::sum_det(a.value().data(), a.numel()));
  Variable va = a;
  return Variable::make_op(std::move(out), {a}, [va](const Tensor& g) mutable {
    if (!va.requires_grad()) return;
    va.accumulate_grad(Tensor(va.shape(), g[0]));
  });
}

Variable mean_all(const Variable& a) {
  const double inv = 1.0 / static_cast<double>(a.numel());
  Tensor out = Tensor::scalar(kernels::sum_det(a.value().data(), a.numel()) * inv);
  Variable va = a;
  return Variable::make_op(std::move(out), {a}, [va, inv](const Tensor& g) mutable {
    if (!va.requires_grad()) return;
    va.accumulate_grad(Tensor(va.shape(), g[0] * inv));
  });
}

Variable sum_per_sample(const Variable& a) {
  require(a.value().rank() >= 2, "sum_per_sample needs rank >= 2, got " + a.value().shape_str());
  const int64_t B = a.dim(0);
  const int64_t S = trailing(a.shape(), 1);
  Tensor out(Shape{B});
  const double* pa = a.value().data();
#pragma omp parallel for schedule(static)
  for (int64_t b = 0; b < B; ++b) out[b] = kernels::sum_det(pa + b * S, S);
  Variable va = a;
  return Variable::make_op(std::move(out), {a}, [va, B, S](const Tensor& g) mutable {
    if (!va.requires_grad()) return;
    Tensor d(va.shape());
    double* pd = d.data();
#pragma omp parallel for schedule(static)
    for (int64_t b = 0; b < B; ++b) {
      const double gv = g[b];
      double* row = pd + b * S;
#pragma omp simd
      for (int64_t i = 0; i < S; ++i) row[i] = gv;
    }
    va.accumulate_grad(d);
  });
}

Variable matmul(const Variable& a, const Variable& b) {
  require(a.value().rank() == 2 && b.value().rank() == 2 && a.dim(1) == b.dim(0),
          "matmul shape mismatch " + a.value().shape_str() + " x " + b.value().shape_str());
  const int64_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
  Tensor out(Shape{M, N});
  kernels::gemm_nn(M, N, K, a.value().data(), b.value().data(), out.data(), false);
  Variable va = a, vb = b;
  return Variable::make_op(std::move(out), {a, b}, [va, vb, M, K, N](const Tensor& g) mutable {
    if (va.requires_grad()) {
      Tensor da(va.shape());
      kernels::gemm_nt(M, K, N, g.data(), vb.value().data(), da.data(), false);
      va.accumulate_grad(da);
    }
    if (vb.requires_grad()) {
      Tensor db(vb.shape());
      kernels::gemm_tn(K, N, M, va.value().data(), g.data(), db.data(), false);
      vb.accumulate_grad(db);
    }
  });
}

Variable bmm(const Variable& a, const Variable& b) {
  require(a.value().rank() == 3 && b.value().rank() == 3 && a.dim(0) == b.dim(0) && a.dim(2) == b.dim(1),
          "bmm shape mismatch " + a.value().shape_str() + " x " + b.value().shape_str());
  const int64_t G = a.dim(0), M = a.dim(1), K = a.dim(2), N = b.dim(2);
  Tensor out(Shape{G, M, N});
  for (int64_t i = 0; i < G; ++i)
    kernels::gemm_nn(M, N, K, a.value().data() + i * M * K, b.value().data() + i * K * N, out.data() + i * M * N,
                     false);
  Variable va = a, vb = b;
  return Variable::make_op(std::move(out), {a, b}, [va, vb, G, M, K, N](const Tensor& g) mutable {
    if (va.requires_grad()) {
      Tensor da(va.shape());
      for (int64_t i = 0; i < G; ++i)
        kernels::gemm_nt(M, K, N, g.data() + i * M * N, vb.value().data() + i * K * N, da.data() + i * M * K, false);
      va.accumulate_grad(da);
    }
    if (vb.requires_grad()) {
      Tensor db(vb.shape());
      for (int64_t i = 0; i < G; ++i)
        kernels::gemm_tn(K, N, M, va.value().data() + i * M * K, g.data() + i * M * N, db.data() + i * K * N, false);
      vb.accumulate_grad(db);
    }
  });
}

Variable bmm_nt(const Variable& a, const Variable& b) {
  require(a.value().rank() == 3 && b.value().rank() == 3 && a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2),
          "bmm_nt shape mismatch " + a.value().shape_str() + " x " + b.value().shape_str());
  const int64_t G = a.dim(0), M = a.dim(1), K = a.dim(2), N = b.dim(1);
  Tensor out(Shape{G, M, N});
  for (int64_t i = 0; i < G; ++i)
    kernels::gemm_nt(M, N, K, a.value().data() + i * M * K, b.value().data() + i * N * K, out.data() + i * M * N,
                     false);
  Variable va = a, vb = b;
  return Variable::make_op(std::move(out), {a, b}, [va, vb, G, M, K, N](const Tensor& g) mutable {
    if (va.requires_grad()) {
      Tensor da(va.shape());
      for (int64_t i = 0; i < G; ++i)
        kernels::gemm_nn(M, K, N, g.data() + i * M * N, vb.value().data() + i * N * K, da.data() + i * M * K, false);
      va.accumulate_grad(da);
    }
    if (vb.requires_grad()) {
      Tensor db(vb.shape());
      for (int64_t i = 0; i < G; ++i)
        kernels::gemm_tn(N, K, M, g.data() + i * M * N, va.value().data() + i * M * K, db.data() + i * N * K, false);
      vb.accumulate_grad(db);
    }
  });
}

Variable matmul_bcast(const Variable& w, const Variable& x) {
  require(w.value().rank() == 2 && x.value().rank() == 3 && w.dim(1) == x.dim(1),
          "matmul_bcast shape mismatch " + w.value().shape_str() + " x " + x.value().shape_str());
  const int64_t M = w.dim(0), K = w.dim(1), G = x.dim(0), N = x.dim(2);
  Tensor out(Shape{G, M, N});
  for (int64_t i = 0; i < G; ++i)
    kernels::gemm_nn(M, N, K, w.value().data(), x.value().data() + i * K * N, out.data() + i * M * N, false);
  Variable vw = w, vx = x;
  return Variable::make_op(std::move(out), {w, x}, [vw, vx, M, K, G, N](const Tensor& g) mutable {
    if (vw.requires_grad()) {
      Tensor dw(vw.shape());
      for (int64_t i = 0; i < G; ++i)
        kernels::gemm_nt(M, K, N, g.data() + i * M * N, vx.value().data() + i * K * N, dw.data(), true);
      vw.accumulate_grad(dw);
    }
    if (vx.requires_grad()) {
      Tensor dx(vx.shape());
      for (int64_t i = 0; i < G; ++i)
        kernels::gemm_tn(K, N, M, vw.value().data(), g.data() + i * M * N, dx.data() + i * K * N, false);
      vx.accumulate_grad(dx);
    }
  });
}

Variable linear(const Variable& x, const Variable& w, const Variable& b) {
  require(w.value().rank() == 2, "linear weight must be rank 2");
  const int64_t in = w.dim(1), out_f = w.dim(0);
  require(x.value().rank() >= 2 && x.shape().back() == in,
          "linear input " + x.value().shape_str() + " incompatible with weight " + w.value().shape_str());
  if (b.defined()) require(b.value().rank() == 1 && b.dim(0) == out_f, "linear bias shape mismatch");
  const int64_t R = x.numel() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out_f;
  Tensor out(out_shape);
  kernels::gemm_nt(R, out_f, in, x.value().data(), w.value().data(), out.data(), false);
  if (b.defined()) {
    double* po = out.data();
    const double* pb = b.value().data();
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < R; ++r) {
#pragma omp simd
      for (int64_t o = 0; o < out_f; ++o) po[r * out_f + o] += pb[o];
    }
  }
  Variable vx = x, vw = w, vb = b;
  std::vector<Variable> parents = b.defined() ? std::vector<Variable>{x, w, b} : std::vector<Variable>{x, w};
  return Variable::make_op(std::move(out), std::move(parents), [vx, vw, vb, R, in, out_f](const Tensor& g) mutable {
    if (vx.requires_grad()) {
      Tensor dx(vx.shape());
      kernels::gemm_nn(R, in, out_f, g.data(), vw.value().data(), dx.data(), false);
      vx.accumulate_grad(dx);
    }
    if (vw.requires_grad()) {
      Tensor dw(vw.shape());
      kernels::gemm_tn(out_f, in, R, g.data(), vx.value().data(), dw.data(), false);
      vw.accumulate_grad(dw);
    }
    if (vb.defined() && vb.requires_grad()) {
      Tensor db(vb.shape());
      double* pd = db.data();
      const double* pg = g.data();
#pragma omp parallel for schedule(static)
      for (int64_t o = 0; o < out_f; ++o) {
        double s = 0.0;
        for (int64_t r = 0; r < R; ++r) s += pg[r * out_f + o];
        pd[o] = s;
      }
      vb.accumulate_grad(db);
    }
  });
}

Variable conv2d(const Variable& x, const Variable& w, const Variable& b, int64_t stride, int64_t pad) {
  require(x.value().rank() == 4 && w.value().rank() == 4, "conv2d expects rank-4 input and weight");
  require(x.dim(1) == w.dim(1), "conv2d channel mismatch: input " + x.value().shape_str() + " vs weight " +
                                    w.value().shape_str());
  const int64_t B = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int64_t Ho = (H + 2 * pad - kh) / stride + 1;
  const int64_t Wo = (W + 2 * pad - kw) / stride + 1;
  require(Ho >= 1 && Wo >= 1, "conv2d output would be empty for input " + x.value().shape_str());
  Tensor out(Shape{B, Co, Ho, Wo});
  kernels::conv2d_forward(x.value().data(), w.value().data(), b.defined() ? b.value().data() : nullptr, out.data(),
                          B, Ci, H, W, Co, kh, kw, stride, pad);
  Variable vx = x, vw = w, vb = b;
  std::vector<Variable> parents = b.defined() ? std::vector<Variable>{x, w, b} : std::vector<Variable>{x, w};
  return Variable::make_op(std::move(out), std::move(parents),
                           [vx, vw, vb, B, Ci, H, W, Co, kh, kw, stride, pad](const Tensor& g) mutable {
                             if (vx.requires_grad()) {
                               Tensor dx(vx.shape());
                               kernels::conv2d_backward_input(g.data(), vw.value().data(), dx.data(), B, Ci, H, W,
                                                              Co, kh, kw, stride, pad);
                               vx.accumulate_grad(dx);
                             }
                             if (vw.requires_grad() || (vb.defined() && vb.requires_grad())) {
                               Tensor dw(vw.shape());
                               Tensor db = vb.defined() ? Tensor(vb.shape()) : Tensor();
                               kernels::conv2d_backward_weights(g.data(), vx.value().data(), dw.data(),
                                                                db.defined() ? db.data() : nullptr, B, Ci, H, W, Co,
                                                                kh, kw, stride, pad);
                               if (vw.requires_grad()) vw.accumulate_grad(dw);
                               if (vb.defined() && vb.requires_grad()) vb.accumulate_grad(db);
                             }
                           });
}

Variable maxpool2x2(const Variable& x) {
  require(x.value().rank() == 4, "maxpool2x2 expects rank-4 input");
  const int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(H % 2 == 0 && W % 2 == 0, "maxpool2x2 requires even spatial dims, got " + x.value().shape_str());
  Tensor out(Shape{B, C, H / 2, W / 2});
  auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(out.numel()));
  kernels::maxpool2x2_forward(x.value().data(), out.data(), argmax->data(), B, C, H, W);
  const int64_t n_out = out.numel(), n_in = x.numel();
  Variable vx = x;
  return Variable::make_op(std::move(out), {x}, [vx, argmax, n_out, n_in](const Tensor& g) mutable {
    if (!vx.requires_grad()) return;
    Tensor dx(vx.shape());
    kernels::maxpool2x2_backward(g.data(), argmax->data(), dx.data(), n_out, n_in);
    vx.accumulate_grad(dx);
  });
}

Variable global_avg_pool(const Variable& x) {
  require(x.value().rank() == 4, "global_avg_pool expects rank-4 input");
  const int64_t B = x.dim(0), C = x.dim(1), S = x.dim(2) * x.dim(3);
  Tensor out(Shape{B, C});
  const double* px = x.value().data();
  const double inv = 1.0 / static_cast<double>(S);
#pragma omp parallel for schedule(static)
  for (int64_t bc = 0; bc < B * C; ++bc) out[bc] = kernels::sum_det(px + bc * S, S) * inv;
  Variable vx = x;
  return Variable::make_op(std::move(out), {x}, [vx, B, C, S, inv](const Tensor& g) mutable {
    if (!vx.requires_grad()) return;
    Tensor dx(vx.shape());
    double* pd = dx.data();
#pragma omp parallel for schedule(static)
    for (int64_t bc = 0; bc < B * C; ++bc) {
      const double gv = g[bc] * inv;
      double* plane = pd + bc * S;
#pragma omp simd
      for (int64_t i = 0; i < S; ++i) plane[i] = gv;
    }
    vx.accumulate_grad(dx);
  });
}

Variable global_max_pool(const Variable& x) {
  require(x.value().rank() == 4, "global_max_pool expects rank-4 input");
  const int64_t B = x.dim(0), C = x.dim(1), S = x.dim(2) * x.dim(3);
  Tensor out(Shape{B, C});
  auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(B * C));
  const double* px = x.value().data();
#pragma omp parallel for schedule(static)
  for (int64_t bc = 0; bc < B * C; ++bc) {
    const double* plane = px + bc * S;
    int64_t best = 0;
    double bv = plane[0];
    for (int64_t i = 1; i < S; ++i)
      if (plane[i] > bv) {
        bv = plane[i];
        best = i;
      }
    out[bc] = bv;
    (*argmax)[static_cast<size_t>(bc)] = bc * S + best;
  }
  Variable vx = x;
  return Variable::make_op(std::move(out), {x}, [vx, argmax, B, C](const Tensor& g) mutable {
    if (!vx.requires_grad()) return;
    Tensor dx(vx.shape());
    double* pd = dx.data();
#pragma omp parallel for schedule(static)
    for (int64_t bc = 0; bc < B * C; ++bc) pd[(*argmax)[static_cast<size_t>(bc)]] += g[bc];
    vx.accumulate_grad(dx);
  });
}

Variable broadcast_spatial(const Variable& v, int64_t H, int64_t W) {
  require(v.value().rank() == 2, "broadcast_spatial expects (B,C) input");
  const int64_t B = v.dim(0), C = v.dim(1), S = H * W;
  Tensor out(Shape{B, C, H, W});
  double* po = out.data();
  const double* pv = v.value().data();
#pragma omp parallel for schedule(static)
  for (int64_t bc = 0; bc < B * C; ++bc) {
    const double val = pv[bc];
    double* plane = po + bc * S;
#pragma omp simd
    for (int64_t i = 0; i < S; ++i) plane[i] = val;
  }
  Variable vv = v;
  return Variable::make_op(std::move(out), {v}, [vv, B, C, S](const Tensor& g) mutable {
    if (!vv.requires_grad()) return;
    Tensor dv(vv.shape());
    const double* pg = g.data();
#pragma omp parallel for schedule(static)
    for (int64_t bc = 0; bc < B * C; ++bc) dv[bc] = kernels::sum_det(pg + bc * S, S);
    vv.accumulate_grad(dv);
  });
}

Variable upsample_bilinear(const Variable& x, int64_t Ho, int64_t Wo) {
  require(x.value().rank() == 4, "upsample_bilinear expects rank-4 input");
  const int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor out(Shape{B, C, Ho, Wo});
  kernels::bilinear_forward(x.value().data(), out.data(), B, C, H, W, Ho, Wo);
  Variable vx = x;
  return Variable::make_op(std::move(out), {x}, [vx, B, C, H, W, Ho, Wo](const Tensor& g) mutable {
    if (!vx.requires_grad()) return;
    Tensor dx(vx.shape());
    kernels::bilinear_backward(g.data(), dx.data(), B, C, H, W, Ho, Wo);
    vx.accumulate_grad(dx);
  });
}

Variable softmax_lastdim(const Variable& x) {
  const int64_t D = x.shape().back();
  const int64_t R = x.numel() / D;
  Tensor out(x.shape());
  kernels::softmax_rows(x.value().data(), out.data(), R, D);
  auto saved = std::make_shared<Tensor>(out);
  Variable vx = x;
  return Variable::make_op(std::move(out), {x}, [vx, saved, R, D](const Tensor& g) mutable {
    if (!vx.requires_grad()) return;
    Tensor dx(vx.shape());
    kernels::softmax_rows_backward(saved->data(), g.data(), dx.data(), R, D);
    vx.accumulate_grad(dx);
  });
}

Variable layernorm_lastdim(const Variable& x, const Variable& gamma, const Variable& beta, double eps) {
  const int64_t D = x.shape().back();
  require(gamma.numel() == D && beta.numel() == D, "layernorm affine size mismatch");
  const int64_t R = x.numel() / D;
  Tensor out(x.shape());
  auto xhat = std::make_shared<Tensor>(x.shape());
  auto inv_std = std::make_shared<Tensor>(Shape{R});
  const double* px = x.value().data();
  const double* pg = gamma.value().data();
  const double* pb = beta.value().data();
  double* po = out.data();
  double* ph = xhat->data();
  double* pis = inv_std->data();
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < R; ++r) {
    const double* row = px + r * D;
    double mean = 0.0;
    for (int64_t i = 0; i < D; ++i) mean += row[i];
    mean /= static_cast<double>(D);
    double var = 0.0;
    for (int64_t i = 0; i < D; ++i) {
      const double c = row[i] - mean;
      var += c * c;
    }
    var /= static_cast<double>(D);
    const double is = 1.0 / std::sqrt(var + eps);
    pis[r] = is;
    for (int64_t i = 0; i < D; ++i) {
      const double h = (row[i] - mean) * is;
      ph[r * D + i] = h;
      po[r * D + i] = pg[i] * h + pb[i];
    }
  }
  Variable vx = x, vg = gamma, vb = beta;
  return Variable::make_op(std::move(out), {x, gamma, beta},
                           [vx, vg, vb, xhat, inv_std, R, D](const Tensor& g) mutable {
                             const double* pg = g.data();
                             const double* ph = xhat->data();
                             if (vx.requires_grad()) {
                               Tensor dx(vx.shape());
                               double* pd = dx.data();
                               const double* pgamma = vg.value().data();
#pragma omp parallel for schedule(static)
                               for (int64_t r = 0; r < R; ++r) {
                                 double s1 = 0.0, s2 = 0.0;
                                 for (int64_t i = 0; i < D; ++i) {
                                   const double dh = pg[r * D + i] * pgamma[i];
                                   s1 += dh;
                                   s2 += dh * ph[r * D + i];
                                 }
                                 s1 /= static_cast<double>(D);
                                 s2 /= static_cast<double>(D);
                                 const double is = (*inv_std)[r];
                                 for (int64_t i = 0; i < D; ++i) {
                                   const double dh = pg[r * D + i] * pgamma[i];
                                   pd[r * D + i] = is * (dh - s1 - ph[r * D + i] * s2);
                                 }
                               }
                               vx.accumulate_grad(dx);
                             }
                             if (vg.requires_grad()) {
                               Tensor dg(vg.shape());
                               double* pd = dg.data();
#pragma omp parallel for schedule(static)
                               for (int64_t i = 0; i < D; ++i) {
                                 double s = 0.0;
                                 for (int64_t r = 0; r < R; ++r) s += pg[r * D + i] * ph[r * D + i];
                                 pd[i] = s;
                               }
                               vg.accumulate_grad(dg);
                             }
                             if (vb.requires_grad()) {
                               Tensor db(vb.shape());
                               double* pd = db.data();
#pragma omp parallel for schedule(static)
                               for (int64_t i = 0; i < D; ++i) {
                                 double s = 0.0;
                                 for (int64_t r = 0; r < R; ++r) s += pg[r * D + i];
                                 pd[i] = s;
                               }
                               vb.accumulate_grad(db);
                             }
                           });
}

Variable batchnorm(const Variable& x, const Variable& gamma, const Variable& beta, Tensor& running_mean,
                   Tensor& running_var, double momentum, double eps, bool training) {
  require(x.value().rank() >= 2, "batchnorm expects rank >= 2");
  const int64_t B = x.dim(0), C = x.dim(1);
  const int64_t S = trailing(x.shape(), 2);
  require(gamma.numel() == C && beta.numel() == C && running_mean.numel() == C && running_var.numel() == C,
          "batchnorm channel mismatch for input " + x.value().shape_str());
  const int64_t N = B * S;
  require(!training || N >= 2, "batchnorm in training mode needs at least 2 values per channel");

  const double* px = x.value().data();
  Tensor out(x.shape());
  double* po = out.data();
  auto xhat = std::make_shared<Tensor>(x.shape());
  auto inv_std = std::make_shared<Tensor>(Shape{C});
  double* ph = xhat->data();
  double* pis = inv_std->data();
  const double* pgamma = gamma.value().data();
  const double* pbeta = beta.value().data();

  if (training) {
    Tensor mean(Shape{C}), var(Shape{C});
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < C; ++c) {
      double m = 0.0;
      for (int64_t b = 0; b < B; ++b) {
        const double* seg = px + (b * C + c) * S;
        for (int64_t i = 0; i < S; ++i) m += seg[i];
      }
      m /= static_cast<double>(N);
      double v = 0.0;
      for (int64_t b = 0; b < B; ++b) {
        const double* seg = px + (b * C + c) * S;
        for (int64_t i = 0; i < S; ++i) {
          const double d = seg[i] - m;
          v += d * d;
        }
      }
      v /= static_cast<double>(N);
      mean[c] = m;
      var[c] = v;
      const double is = 1.0 / std::sqrt(v + eps);
      pis[c] = is;
      for (int64_t b = 0; b < B; ++b) {
        const double* seg = px + (b * C + c) * S;
        double* hseg = ph + (b * C + c) * S;
        double* oseg = po + (b * C + c) * S;
#pragma omp simd
        for (int64_t i = 0; i < S; ++i) {
          const double hv = (seg[i] - m) * is;
          hseg[i] = hv;
          oseg[i] = pgamma[c] * hv + pbeta[c];
        }
      }
    }
    const double unbias = N > 1 ? static_cast<double>(N) / static_cast<double>(N - 1) : 1.0;
    for (int64_t c = 0; c < C; ++c) {
      running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean[c];
      running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var[c] * unbias;
    }
  } else {
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < C; ++c) {
      const double m = running_mean[c];
      const double is = 1.0 / std::sqrt(running_var[c] + eps);
      pis[c] = is;
      for (int64_t b = 0; b < B; ++b) {
        const double* seg = px + (b * C + c) * S;
        double* hseg = ph + (b * C + c) * S;
        double* oseg = po + (b * C + c) * S;
#pragma omp simd
        for (int64_t i = 0; i < S; ++i) {
          const double hv = (seg[i] - m) * is;
          hseg[i] = hv;
          oseg[i] = pgamma[c] * hv + pbeta[c];
        }
      }
    }
  }

  Variable vx = x, vg = gamma, vb = beta;
  return Variable::make_op(
      std::move(out), {x, gamma, beta}, [vx, vg, vb, xhat, inv_std, B, C, S, training](const Tensor& g) mutable {
        const double* pg = g.data();
        const double* ph = xhat->data();
        const double* pis = inv_std->data();
        const int64_t N = B * S;
        // Per-channel reductions shared by all three grads.
        Tensor sum_g(Shape{C}), sum_gh(Shape{C});
#pragma omp parallel for schedule(static)
        for (int64_t c = 0; c < C; ++c) {
          double s1 = 0.0, s2 = 0.0;
          for (int64_t b = 0; b < B; ++b) {
            const double* gseg = pg + (b * C + c) * S;
            const double* hseg = ph + (b * C + c) * S;
            for (int64_t i = 0; i < S; ++i) {
              s1 += gseg[i];
              s2 += gseg[i] * hseg[i];
            }
          }
          sum_g[c] = s1;
          sum_gh[c] = s2;
        }
        if (vx.requires_grad()) {
          Tensor dx(vx.shape());
          double* pd = dx.data();
          const double* pgamma = vg.value().data();
#pragma omp parallel for schedule(static)
          for (int64_t c = 0; c < C; ++c) {
            const double is = pis[c];
            const double gam = pgamma[c];
            const double m1 = sum_g[c] / static_cast<double>(N);
            const double m2 = sum_gh[c] / static_cast<double>(N);
            for (int64_t b = 0; b < B; ++b) {
              const double* gseg = pg + (b * C + c) * S;
              const double* hseg = ph + (b * C + c) * S;
              double* dseg = pd + (b * C + c) * S;
              if (training) {
#pragma omp simd
                for (int64_t i = 0; i < S; ++i) dseg[i] = gam * is * (gseg[i] - m1 - hseg[i] * m2);
              } else {
#pragma omp simd
                for (int64_t i = 0; i < S; ++i) dseg[i] = gam * is * gseg[i];
              }
            }
          }
          vx.accumulate_grad(dx);
        }
        if (vg.requires_grad()) vg.accumulate_grad(sum_gh);
        if (vb.requires_grad()) vb.accumulate_grad(sum_g);
      });
}

Variable reshape(const Variable& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  Variable vx = x;
  return Variable::make_op(std::move(out), {x}, [vx](const Tensor& g) mutable {
    if (!vx.requires_grad()) return;
    vx.accumulate_grad(g.reshaped(vx.shape()));
  });
}

namespace {
Tensor permute_tensor(const Tensor& in, const std::vector<int64_t>& dims) {
  const int64_t r = in.rank();
  Shape out_shape(static_cast<size_t>(r));
  for (int64_t i = 0; i < r; ++i) out_shape[static_cast<size_t>(i)] = in.dim(dims[static_cast<size_t>(i)]);
  Tensor out(out_shape);
  std::vector<int64_t> in_strides(static_cast<size_t>(r), 1), out_strides(static_cast<size_t>(r), 1);
  for (int64_t i = r - 2; i >= 0; --i)
    in_strides[static_cast<size_t>(i)] = in_strides[static_cast<size_t>(i + 1)] * in.dim(i + 1);
  for (int64_t i = r - 2; i >= 0; --i)
    out_strides[static_cast<size_t>(i)] = out_strides[static_cast<size_t>(i + 1)] * out_shape[static_cast<size_t>(i + 1)];
  const int64_t n = in.numel();
  const double* pi = in.data();
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (int64_t o = 0; o < n; ++o) {
    int64_t rem = o, src = 0;
    for (int64_t d = 0; d < r; ++d) {
      const int64_t coord = rem / out_strides[static_cast<size_t>(d)];
      rem -= coord * out_strides[static_cast<size_t>(d)];
      src += coord * in_strides[static_cast<size_t>(dims[static_cast<size_t>(d)])];
    }
    po[o] = pi[src];
  }
  return out;
}
}  // namespace

Variable permute(const Variable& x, const std::vector<int64_t>& dims) {
  require(static_cast<int64_t>(dims.size()) == x.value().rank(), "permute rank mismatch");
  Tensor out = permute_tensor(x.value(), dims);
  std::vector<int64_t> inv(dims.size());
  for (size_t i = 0; i < dims.size(); ++i) inv[static_cast<size_t>(dims[i])] = static_cast<int64_t>(i);
  Variable vx = x;
  return Variable::make_op(std::move(out), {x}, [vx, inv](const Tensor& g) mutable {
    if (!vx.requires_grad()) return;
    vx.accumulate_grad(permute_tensor(g, inv));
  });
}

Variable concat(const std::vector<Variable>& xs, int64_t axis) {
  require(!xs.empty(), "concat of nothing");
  const int64_t r = xs[0].value().rank();
  require(axis >= 0 && axis < r, "concat axis out of range");
  int64_t axis_total = 0;
  for (const auto& v : xs) {
    require(v.value().rank() == r, "concat rank mismatch");
    for (int64_t d = 0; d < r; ++d)
      if (d != axis)
        require(v.dim(d) == xs[0].dim(d), "concat shape mismatch at " + v.value().shape_str());
    axis_total += v.dim(axis);
  }
  Shape out_shape = xs[0].shape();
  out_shape[static_cast<size_t>(axis)] = axis_total;
  Tensor out(out_shape);
  int64_t outer = 1, inner = 1;
  for (int64_t d = 0; d < axis; ++d) outer *= out_shape[static_cast<size_t>(d)];
  for (int64_t d = axis + 1; d < r; ++d) inner *= out_shape[static_cast<size_t>(d)];
  double* po = out.data();
  const int64_t out_row = axis_total * inner;
  std::vector<int64_t> lens;
  lens.reserve(xs.size());
  int64_t offset = 0;
  for (const auto& v : xs) {
    const int64_t len = v.dim(axis) * inner;
    lens.push_back(len);
    const double* pv = v.value().data();
#pragma omp parallel for schedule(static)
    for (int64_t o = 0; o < outer; ++o)
      std::memcpy(po + o * out_row + offset, pv + o * len, static_cast<size_t>(len) * sizeof(double));
    offset += len;
  }
  std::vector<Variable> parents = xs;
  return Variable::make_op(std::move(out), xs, [parents, lens, outer, out_row](const Tensor& g) mutable {
    const double* pg = g.data();
    int64_t offset = 0;
    for (size_t k = 0; k < parents.size(); ++k) {
      Variable& v = parents[k];
      const int64_t len = lens[k];
      if (v.requires_grad()) {
        Tensor d(v.shape());
        double* pd = d.data();
#pragma omp parallel for schedule(static)
        for (int64_t o = 0; o < outer; ++o)
          std::memcpy(pd + o * len, pg + o * out_row + offset, static_cast<size_t>(len) * sizeof(double));
        v.accumulate_grad(d);
      }
      offset += len;
    }
  });
}

Variable space_to_depth_2x2(const Variable& x) {
  require(x.value().rank() == 4, "space_to_depth_2x2 expects (B,H,W,C)");
  const int64_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  require(H % 2 == 0 && W % 2 == 0, "space_to_depth_2x2 requires even H,W, got " + x.value().shape_str());
  const int64_t Ho = H / 2, Wo = W / 2;
  // Fixed slice offsets (dh,dw): (0,0),(1,0),(0,1),(1,1).
  static constexpr int64_t kDh[4] = {0, 1, 0, 1};
  static constexpr int64_t kDw[4] = {0, 0, 1, 1};
  Tensor out(Shape{B, Ho, Wo, 4 * C});
  const double* pi = x.value().data();
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (int64_t bh = 0; bh < B * Ho; ++bh) {
    const int64_t b = bh / Ho, ho = bh % Ho;
    for (int64_t wo = 0; wo < Wo; ++wo)
      for (int64_t s = 0; s < 4; ++s) {
        const double* src = pi + ((b * H + 2 * ho + kDh[s]) * W + 2 * wo + kDw[s]) * C;
        double* dst = po + ((b * Ho + ho) * Wo + wo) * 4 * C + s * C;
        std::memcpy(dst, src, static_cast<size_t>(C) * sizeof(double));
      }
  }
  Variable vx = x;
  return Variable::make_op(std::move(out), {x}, [vx, B, H, W, C, Ho, Wo](const Tensor& g) mutable {
    if (!vx.requires_grad()) return;
    Tensor dx(vx.shape());
    const double* pg = g.data();
    double* pd = dx.data();
#pragma omp parallel for schedule(static)
    for (int64_t bh = 0; bh < B * Ho; ++bh) {
      const int64_t b = bh / Ho, ho = bh % Ho;
      for (int64_t wo = 0; wo < Wo; ++wo)
        for (int64_t s = 0; s < 4; ++s) {
          double* dst = pd + ((b * H + 2 * ho + kDh[s]) * W + 2 * wo + kDw[s]) * C;
          const double* src = pg + ((b * Ho + ho) * Wo + wo) * 4 * C + s * C;
          std::memcpy(dst, src, static_cast<size_t>(C) * sizeof(double));
        }
    }
    vx.accumulate_grad(dx);
  });
}

Variable depth_to_space_2x2(const Variable& x) {
  require(x.value().rank() == 4, "depth_to_space_2x2 expects (B,H,W,C)");
  const int64_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  require(C % 4 == 0, "depth_to_space_2x2 requires channels divisible by 4, got " + x.value().shape_str());
  const int64_t c_out = C / 4;
  static constexpr int64_t kDh[4] = {0, 1, 0, 1};
  static constexpr int64_t kDw[4] = {0, 0, 1, 1};
  Tensor out(Shape{B, 2 * H, 2 * W, c_out});
  const double* pi = x.value().data();
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (int64_t bh = 0; bh < B * H; ++bh) {
    const int64_t b = bh / H, h = bh % H;
    for (int64_t w = 0; w < W; ++w)
      for (int64_t s = 0; s < 4; ++s) {
        const double* src = pi + ((b * H + h) * W + w) * C + s * c_out;
        double* dst = po + ((b * 2 * H + 2 * h + kDh[s]) * 2 * W + 2 * w + kDw[s]) * c_out;
        std::memcpy(dst, src, static_cast<size_t>(c_out) * sizeof(double));
      }
  }
  Variable vx = x;
  return Variable::make_op(std::move(out), {x}, [vx, B, H, W, C, c_out](const Tensor& g) mutable {
    if (!vx.requires_grad()) return;
    Tensor dx(vx.shape());
    const double* pg = g.data();
    double* pd = dx.data();
#pragma omp parallel for schedule(static)
    for (int64_t bh = 0; bh < B * H; ++bh) {
      const int64_t b = bh / H, h = bh % H;
      for (int64_t w = 0; w < W; ++w)
        for (int64_t s = 0; s < 4; ++s) {
          double* dst = pd + ((b * H + h) * W + w) * C + s * c_out;
          const double* src = pg + ((b * 2 * H + 2 * h + kDh[s]) * 2 * W + 2 * w + kDw[s]) * c_out;
          std::memcpy(dst, src, static_cast<size_t>(c_out) * sizeof(double));
        }
    }
    vx.accumulate_grad(dx);
  });
}

Variable dropout(const Variable& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  require(p < 1.0, "dropout probability must be < 1");
  const int64_t n = x.numel();
  const double scale = 1.0 / (1.0 - p);
  const uint64_t seed = rng.seed();
  const uint64_t base = rng.counter();
  auto mask = std::make_shared<Tensor>(x.shape());
  double* pm = mask->data();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    Rng r(seed, base + static_cast<uint64_t>(i));
    pm[i] = r.uniform() >= p ? scale : 0.0;
  }
  rng.set_counter(base + static_cast<uint64_t>(n));
  Tensor out(x.shape());
  const double* px = x.value().data();
  double* po = out.data();
#pragma omp parallel for simd schedule(static)
  for (int64_t i = 0; i < n; ++i) po[i] = px[i] * pm[i];
  Variable vx = x;
  return Variable::make_op(std::move(out), {x}, [vx, mask](const Tensor& g) mutable {
    if (!vx.requires_grad()) return;
    Tensor d(g.shape());
    const double* pg = g.data();
    const double* pm = mask->data();
    double* pd = d.data();
    const int64_t m = g.numel();
#pragma omp parallel for simd schedule(static)
    for (int64_t i = 0; i < m; ++i) pd[i] = pg[i] * pm[i];
    vx.accumulate_grad(d);
  });
}

}  // namespace mptp::ops
