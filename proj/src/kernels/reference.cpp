// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/kernels/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace mptp::refk {
namespace {
int64_t out_dim(int64_t in, int64_t k, int64_t s, int64_t p) { return (in + 2 * p - k) / s + 1; }
}  // namespace

void gemm_nn(int64_t M, int64_t N, int64_t K, const double* A, const double* B, double* C, bool accumulate) {
  if (!accumulate) std::memset(C, 0, static_cast<size_t>(M * N) * sizeof(double));
  for (int64_t i = 0; i < M; ++i)
    for (int64_t k = 0; k < K; ++k) {
      const double a = A[i * K + k];
      for (int64_t j = 0; j < N; ++j) C[i * N + j] += a * B[k * N + j];
    }
}

void gemm_nt(int64_t M, int64_t N, int64_t K, const double* A, const double* B, double* C, bool accumulate) {
  for (int64_t i = 0; i < M; ++i)
    for (int64_t j = 0; j < N; ++j) {
      double s = accumulate ? C[i * N + j] : 0.0;
      for (int64_t k = 0; k < K; ++k) s += A[i * K + k] * B[j * K + k];
      C[i * N + j] = s;
    }
}

void gemm_tn(int64_t M, int64_t N, int64_t K, const double* A, const double* B, double* C, bool accumulate) {
  if (!accumulate) std::memset(C, 0, static_cast<size_t>(M * N) * sizeof(double));
  for (int64_t k = 0; k < K; ++k)
    for (int64_t i = 0; i < M; ++i) {
      const double a = A[k * M + i];
      for (int64_t j = 0; j < N; ++j) C[i * N + j] += a * B[k * N + j];
    }
}

void conv2d_forward(const double* x, const double* w, const double* bias, double* y, int64_t B, int64_t Ci,
                    int64_t H, int64_t W, int64_t Co, int64_t kh, int64_t kw, int64_t stride, int64_t pad) {
  const int64_t Ho = out_dim(H, kh, stride, pad), Wo = out_dim(W, kw, stride, pad);
  for (int64_t b = 0; b < B; ++b)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t ho = 0; ho < Ho; ++ho)
        for (int64_t wo = 0; wo < Wo; ++wo) {
          double s = bias ? bias[co] : 0.0;
          for (int64_t ci = 0; ci < Ci; ++ci)
            for (int64_t dh = 0; dh < kh; ++dh)
              for (int64_t dw = 0; dw < kw; ++dw) {
                const int64_t h = ho * stride - pad + dh;
                const int64_t wi = wo * stride - pad + dw;
                if (h < 0 || h >= H || wi < 0 || wi >= W) continue;
                s += x[((b * Ci + ci) * H + h) * W + wi] * w[((co * Ci + ci) * kh + dh) * kw + dw];
              }
          y[((b * Co + co) * Ho + ho) * Wo + wo] = s;
        }
}

void conv2d_backward_input(const double* dy, const double* w, double* dx, int64_t B, int64_t Ci, int64_t H,
                           int64_t W, int64_t Co, int64_t kh, int64_t kw, int64_t stride, int64_t pad) {
  const int64_t Ho = out_dim(H, kh, stride, pad), Wo = out_dim(W, kw, stride, pad);
  std::memset(dx, 0, static_cast<size_t>(B * Ci * H * W) * sizeof(double));
  for (int64_t b = 0; b < B; ++b)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t ho = 0; ho < Ho; ++ho)
        for (int64_t wo = 0; wo < Wo; ++wo) {
          const double g = dy[((b * Co + co) * Ho + ho) * Wo + wo];
          for (int64_t ci = 0; ci < Ci; ++ci)
            for (int64_t dh = 0; dh < kh; ++dh)
              for (int64_t dw = 0; dw < kw; ++dw) {
                const int64_t h = ho * stride - pad + dh;
                const int64_t wi = wo * stride - pad + dw;
                if (h < 0 || h >= H || wi < 0 || wi >= W) continue;
                dx[((b * Ci + ci) * H + h) * W + wi] += g * w[((co * Ci + ci) * kh + dh) * kw + dw];
              }
        }
}

void conv2d_backward_weights(const double* dy, const double* x, double* dw, double* dbias, int64_t B, int64_t Ci,
                             int64_t H, int64_t W, int64_t Co, int64_t kh, int64_t kw, int64_t stride, int64_t pad) {
  const int64_t Ho = out_dim(H, kh, stride, pad), Wo = out_dim(W, kw, stride, pad);
  for (int64_t b = 0; b < B; ++b)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t ho = 0; ho < Ho; ++ho)
        for (int64_t wo = 0; wo < Wo; ++wo) {
          const double g = dy[((b * Co + co) * Ho + ho) * Wo + wo];
          if (dbias) dbias[co] += g;
          for (int64_t ci = 0; ci < Ci; ++ci)
            for (int64_t kr = 0; kr < kh; ++kr)
              for (int64_t kc = 0; kc < kw; ++kc) {
                const int64_t h = ho * stride - pad + kr;
                const int64_t wi = wo * stride - pad + kc;
                if (h < 0 || h >= H || wi < 0 || wi >= W) continue;
                dw[((co * Ci + ci) * kh + kr) * kw + kc] += g * x[((b * Ci + ci) * H + h) * W + wi];
              }
        }
}

void maxpool2x2_forward(const double* x, double* y, int64_t* argmax, int64_t B, int64_t C, int64_t H, int64_t W) {
  const int64_t Ho = H / 2, Wo = W / 2;
  for (int64_t bc = 0; bc < B * C; ++bc)
    for (int64_t ho = 0; ho < Ho; ++ho)
      for (int64_t wo = 0; wo < Wo; ++wo) {
        const int64_t base = bc * H * W;
        int64_t best = 2 * ho * W + 2 * wo;
        double bv = x[base + best];
        const int64_t cand[3] = {2 * ho * W + 2 * wo + 1, (2 * ho + 1) * W + 2 * wo, (2 * ho + 1) * W + 2 * wo + 1};
        for (int64_t c : cand)
          if (x[base + c] > bv) {
            bv = x[base + c];
            best = c;
          }
        y[(bc * Ho + ho) * Wo + wo] = bv;
        argmax[(bc * Ho + ho) * Wo + wo] = base + best;
      }
}

void bilinear_forward(const double* x, double* y, int64_t B, int64_t C, int64_t H, int64_t W, int64_t Ho,
                      int64_t Wo) {
  auto taps = [](int64_t o, int64_t in_dim, int64_t out_dim, int64_t& i0, int64_t& i1, double& f) {
    const double src = (static_cast<double>(o) + 0.5) * static_cast<double>(in_dim) / static_cast<double>(out_dim) - 0.5;
    const double fl = std::floor(src);
    f = src - fl;
    i0 = std::clamp<int64_t>(static_cast<int64_t>(fl), 0, in_dim - 1);
    i1 = std::clamp<int64_t>(static_cast<int64_t>(fl) + 1, 0, in_dim - 1);
  };
  for (int64_t bc = 0; bc < B * C; ++bc)
    for (int64_t ho = 0; ho < Ho; ++ho)
      for (int64_t wo = 0; wo < Wo; ++wo) {
        int64_t h0, h1, w0, w1;
        double fh, fw;
        taps(ho, H, Ho, h0, h1, fh);
        taps(wo, W, Wo, w0, w1, fw);
        const double* p = x + bc * H * W;
        y[(bc * Ho + ho) * Wo + wo] = (1 - fh) * ((1 - fw) * p[h0 * W + w0] + fw * p[h0 * W + w1]) +
                                      fh * ((1 - fw) * p[h1 * W + w0] + fw * p[h1 * W + w1]);
      }
}

void softmax_rows(const double* x, double* y, int64_t R, int64_t C) {
  for (int64_t r = 0; r < R; ++r) {
    double mx = x[r * C];
    for (int64_t c = 1; c < C; ++c) mx = std::max(mx, x[r * C + c]);
    double s = 0.0;
    for (int64_t c = 0; c < C; ++c) {
      y[r * C + c] = std::exp(x[r * C + c] - mx);
      s += y[r * C + c];
    }
    for (int64_t c = 0; c < C; ++c) y[r * C + c] /= s;
  }
}

double sum(const double* x, int64_t n) {
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += x[i];
  return s;
}

}  // namespace mptp::refk
