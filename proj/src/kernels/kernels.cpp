// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace mptp::kernels {
namespace {

constexpr int64_t kJTile = 512;  // accumulator tile: 4 rows x 512 cols = 16KB stack
constexpr int64_t kIBlock = 4;

// C (+)= A(M,K)*B(K,N) with explicit leading dimensions. Row blocks of 4 keep
// partial sums in a stack tile so each B row segment is read once per block.
void gemm_nn_ld(int64_t M, int64_t N, int64_t K, const double* A, int64_t lda, const double* B, int64_t ldb,
                double* C, int64_t ldc, bool accumulate) {
  const int64_t nblocks = (M + kIBlock - 1) / kIBlock;
#pragma omp parallel for schedule(static)
  for (int64_t ib = 0; ib < nblocks; ++ib) {
    double buf[kIBlock * kJTile];
    const int64_t i0 = ib * kIBlock;
    const int64_t rows = std::min(kIBlock, M - i0);
    for (int64_t j0 = 0; j0 < N; j0 += kJTile) {
      const int64_t jn = std::min(kJTile, N - j0);
      for (int64_t r = 0; r < rows; ++r) {
        if (accumulate)
          std::memcpy(buf + r * kJTile, C + (i0 + r) * ldc + j0, static_cast<size_t>(jn) * sizeof(double));
        else
          std::memset(buf + r * kJTile, 0, static_cast<size_t>(jn) * sizeof(double));
      }
      for (int64_t k = 0; k < K; ++k) {
        const double* __restrict brow = B + k * ldb + j0;
        if (rows == kIBlock) {
          const double a0 = A[(i0 + 0) * lda + k];
          const double a1 = A[(i0 + 1) * lda + k];
          const double a2 = A[(i0 + 2) * lda + k];
          const double a3 = A[(i0 + 3) * lda + k];
          double* __restrict r0 = buf;
          double* __restrict r1 = buf + kJTile;
          double* __restrict r2 = buf + 2 * kJTile;
          double* __restrict r3 = buf + 3 * kJTile;
#pragma omp simd
          for (int64_t j = 0; j < jn; ++j) {
            const double bv = brow[j];
            r0[j] += a0 * bv;
            r1[j] += a1 * bv;
            r2[j] += a2 * bv;
            r3[j] += a3 * bv;
          }
        } else {
          for (int64_t r = 0; r < rows; ++r) {
            const double a = A[(i0 + r) * lda + k];
            double* __restrict dst = buf + r * kJTile;
#pragma omp simd
            for (int64_t j = 0; j < jn; ++j) dst[j] += a * brow[j];
          }
        }
      }
      for (int64_t r = 0; r < rows; ++r)
        std::memcpy(C + (i0 + r) * ldc + j0, buf + r * kJTile, static_cast<size_t>(jn) * sizeof(double));
    }
  }
}

void gemm_nt_ld(int64_t M, int64_t N, int64_t K, const double* A, int64_t lda, const double* B, int64_t ldb,
                double* C, int64_t ldc, bool accumulate) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < M; ++i) {
    const double* __restrict arow = A + i * lda;
    for (int64_t j = 0; j < N; ++j) {
      const double* __restrict brow = B + j * ldb;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (int64_t k = 0; k < K; ++k) acc += arow[k] * brow[k];
      if (accumulate)
        C[i * ldc + j] += acc;
      else
        C[i * ldc + j] = acc;
    }
  }
}

void gemm_tn_ld(int64_t M, int64_t N, int64_t K, const double* A, int64_t lda, const double* B, int64_t ldb,
                double* C, int64_t ldc, bool accumulate) {
  const int64_t nblocks = (M + kIBlock - 1) / kIBlock;
#pragma omp parallel for schedule(static)
  for (int64_t ib = 0; ib < nblocks; ++ib) {
    double buf[kIBlock * kJTile];
    const int64_t i0 = ib * kIBlock;
    const int64_t rows = std::min(kIBlock, M - i0);
    for (int64_t j0 = 0; j0 < N; j0 += kJTile) {
      const int64_t jn = std::min(kJTile, N - j0);
      for (int64_t r = 0; r < rows; ++r) {
        if (accumulate)
          std::memcpy(buf + r * kJTile, C + (i0 + r) * ldc + j0, static_cast<size_t>(jn) * sizeof(double));
        else
          std::memset(buf + r * kJTile, 0, static_cast<size_t>(jn) * sizeof(double));
      }
      for (int64_t k = 0; k < K; ++k) {
        const double* __restrict brow = B + k * ldb + j0;
        for (int64_t r = 0; r < rows; ++r) {
          const double a = A[k * lda + (i0 + r)];
          double* __restrict dst = buf + r * kJTile;
#pragma omp simd
          for (int64_t j = 0; j < jn; ++j) dst[j] += a * brow[j];
        }
      }
      for (int64_t r = 0; r < rows; ++r)
        std::memcpy(C + (i0 + r) * ldc + j0, buf + r * kJTile, static_cast<size_t>(jn) * sizeof(double));
    }
  }
}

// Gathers the patch matrix for output rows [o0,o1): cols(Ci*kh*kw, (o1-o0)*Wo).
void im2col_rows(const double* x, double* cols, int64_t Ci, int64_t H, int64_t W, int64_t kh, int64_t kw,
                 int64_t stride, int64_t pad, int64_t Wo, int64_t o0, int64_t o1) {
  const int64_t KK = kh * kw;
  const int64_t tile_n = (o1 - o0) * Wo;
#pragma omp parallel for schedule(static)
  for (int64_t row = 0; row < Ci * KK; ++row) {
    const int64_t ci = row / KK;
    const int64_t ki = row % KK;
    const int64_t dh = ki / kw;
    const int64_t dw = ki % kw;
    double* __restrict dst = cols + row * tile_n;
    for (int64_t ho = o0; ho < o1; ++ho) {
      const int64_t h = ho * stride - pad + dh;
      double* __restrict seg = dst + (ho - o0) * Wo;
      if (h < 0 || h >= H) {
        std::memset(seg, 0, static_cast<size_t>(Wo) * sizeof(double));
        continue;
      }
      const double* __restrict src = x + (ci * H + h) * W;
      for (int64_t wo = 0; wo < Wo; ++wo) {
        const int64_t w = wo * stride - pad + dw;
        seg[wo] = (w >= 0 && w < W) ? src[w] : 0.0;
      }
    }
  }
}

int64_t conv_out_dim(int64_t in, int64_t k, int64_t stride, int64_t pad) { return (in + 2 * pad - k) / stride + 1; }

int64_t rows_per_tile(int64_t kcols, int64_t Wo, int64_t Ho) {
  const int64_t budget = int64_t(4) << 20;  // doubles of scratch (32MB)
  return std::max<int64_t>(1, std::min(Ho, budget / std::max<int64_t>(1, kcols * Wo)));
}

}  // namespace

void gemm_nn(int64_t M, int64_t N, int64_t K, const double* A, const double* B, double* C, bool accumulate) {
  gemm_nn_ld(M, N, K, A, K, B, N, C, N, accumulate);
}
void gemm_nt(int64_t M, int64_t N, int64_t K, const double* A, const double* B, double* C, bool accumulate) {
  gemm_nt_ld(M, N, K, A, K, B, K, C, N, accumulate);
}
void gemm_tn(int64_t M, int64_t N, int64_t K, const double* A, const double* B, double* C, bool accumulate) {
  gemm_tn_ld(M, N, K, A, M, B, N, C, N, accumulate);
}

void conv2d_forward(const double* x, const double* w, const double* bias, double* y, int64_t B, int64_t Ci,
                    int64_t H, int64_t W, int64_t Co, int64_t kh, int64_t kw, int64_t stride, int64_t pad) {
  const int64_t Ho = conv_out_dim(H, kh, stride, pad);
  const int64_t Wo = conv_out_dim(W, kw, stride, pad);
  const int64_t N = Ho * Wo;
  if (kh == 1 && kw == 1 && stride == 1 && pad == 0) {
    for (int64_t b = 0; b < B; ++b)
      gemm_nn_ld(Co, N, Ci, w, Ci, x + b * Ci * N, N, y + b * Co * N, N, false);
  } else {
    const int64_t kcols = Ci * kh * kw;
    const int64_t tile = rows_per_tile(kcols, Wo, Ho);
    std::vector<double> cols(static_cast<size_t>(kcols * tile * Wo));
    for (int64_t b = 0; b < B; ++b) {
      const double* xb = x + b * Ci * H * W;
      double* yb = y + b * Co * N;
      for (int64_t o0 = 0; o0 < Ho; o0 += tile) {
        const int64_t o1 = std::min(Ho, o0 + tile);
        im2col_rows(xb, cols.data(), Ci, H, W, kh, kw, stride, pad, Wo, o0, o1);
        gemm_nn_ld(Co, (o1 - o0) * Wo, kcols, w, kcols, cols.data(), (o1 - o0) * Wo, yb + o0 * Wo, N, false);
      }
    }
  }
  if (bias) {
#pragma omp parallel for schedule(static)
    for (int64_t bc = 0; bc < B * Co; ++bc) {
      const double bv = bias[bc % Co];
      double* __restrict plane = y + bc * N;
#pragma omp simd
      for (int64_t i = 0; i < N; ++i) plane[i] += bv;
    }
  }
}

void conv2d_backward_input(const double* dy, const double* w, double* dx, int64_t B, int64_t Ci, int64_t H,
                           int64_t W, int64_t Co, int64_t kh, int64_t kw, int64_t stride, int64_t pad) {
  const int64_t Ho = conv_out_dim(H, kh, stride, pad);
  const int64_t Wo = conv_out_dim(W, kw, stride, pad);
  const int64_t N = Ho * Wo;
  if (kh == 1 && kw == 1 && stride == 1 && pad == 0) {
    for (int64_t b = 0; b < B; ++b)
      gemm_tn_ld(Ci, N, Co, w, Ci, dy + b * Co * N, N, dx + b * Ci * N, N, false);
    return;
  }
  const int64_t KK = kh * kw;
  const int64_t kcols = Ci * KK;
  std::vector<double> colg(static_cast<size_t>(kcols * N));
  for (int64_t b = 0; b < B; ++b) {
    gemm_tn_ld(kcols, N, Co, w, kcols, dy + b * Co * N, N, colg.data(), N, false);
    double* dxb = dx + b * Ci * H * W;
#pragma omp parallel for schedule(static)
    for (int64_t cih = 0; cih < Ci * H; ++cih) {
      const int64_t ci = cih / H;
      const int64_t h = cih % H;
      for (int64_t wi = 0; wi < W; ++wi) {
        double acc = 0.0;
        for (int64_t dh = 0; dh < kh; ++dh) {
          const int64_t hnum = h + pad - dh;
          if (hnum < 0 || hnum % stride != 0) continue;
          const int64_t ho = hnum / stride;
          if (ho >= Ho) continue;
          for (int64_t dw = 0; dw < kw; ++dw) {
            const int64_t wnum = wi + pad - dw;
            if (wnum < 0 || wnum % stride != 0) continue;
            const int64_t wo = wnum / stride;
            if (wo >= Wo) continue;
            acc += colg[(ci * KK + dh * kw + dw) * N + ho * Wo + wo];
          }
        }
        dxb[cih * W + wi] = acc;
      }
    }
  }
}

void conv2d_backward_weights(const double* dy, const double* x, double* dw, double* dbias, int64_t B, int64_t Ci,
                             int64_t H, int64_t W, int64_t Co, int64_t kh, int64_t kw, int64_t stride, int64_t pad) {
  const int64_t Ho = conv_out_dim(H, kh, stride, pad);
  const int64_t Wo = conv_out_dim(W, kw, stride, pad);
  const int64_t N = Ho * Wo;
  const int64_t kcols = Ci * kh * kw;
  if (kh == 1 && kw == 1 && stride == 1 && pad == 0) {
    for (int64_t b = 0; b < B; ++b)
      gemm_nt_ld(Co, Ci, N, dy + b * Co * N, N, x + b * Ci * N, N, dw, Ci, true);
  } else {
    const int64_t tile = rows_per_tile(kcols, Wo, Ho);
    std::vector<double> cols(static_cast<size_t>(kcols * tile * Wo));
    for (int64_t b = 0; b < B; ++b) {
      const double* xb = x + b * Ci * H * W;
      const double* dyb = dy + b * Co * N;
      for (int64_t o0 = 0; o0 < Ho; o0 += tile) {
        const int64_t o1 = std::min(Ho, o0 + tile);
        im2col_rows(xb, cols.data(), Ci, H, W, kh, kw, stride, pad, Wo, o0, o1);
        gemm_nt_ld(Co, kcols, (o1 - o0) * Wo, dyb + o0 * Wo, N, cols.data(), (o1 - o0) * Wo, dw, kcols, true);
      }
    }
  }
  if (dbias) {
#pragma omp parallel for schedule(static)
    for (int64_t co = 0; co < Co; ++co) {
      double acc = 0.0;
      for (int64_t b = 0; b < B; ++b) acc += sum_det(dy + (b * Co + co) * N, N);
      dbias[co] += acc;
    }
  }
}

void maxpool2x2_forward(const double* x, double* y, int64_t* argmax, int64_t B, int64_t C, int64_t H, int64_t W) {
  const int64_t Ho = H / 2, Wo = W / 2;
#pragma omp parallel for schedule(static)
  for (int64_t p = 0; p < B * C * Ho; ++p) {
    const int64_t ho = p % Ho;
    const int64_t bc = p / Ho;
    const double* plane = x + bc * H * W;
    const int64_t base = bc * H * W;
    for (int64_t wo = 0; wo < Wo; ++wo) {
      const int64_t h = 2 * ho, w = 2 * wo;
      int64_t best = h * W + w;
      double bv = plane[best];
      const int64_t cand[3] = {h * W + w + 1, (h + 1) * W + w, (h + 1) * W + w + 1};
      for (int64_t c : cand)
        if (plane[c] > bv) {
          bv = plane[c];
          best = c;
        }
      y[p * Wo + wo] = bv;
      argmax[p * Wo + wo] = base + best;
    }
  }
}

void maxpool2x2_backward(const double* dy, const int64_t* argmax, double* dx, int64_t n_out, int64_t n_in) {
  std::memset(dx, 0, static_cast<size_t>(n_in) * sizeof(double));
  // Pool windows are disjoint, so argmax targets never collide across outputs.
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n_out; ++i) dx[argmax[i]] += dy[i];
}

namespace {
inline void bilinear_taps(int64_t o, int64_t in_dim, int64_t out_dim, int64_t& i0, int64_t& i1, double& f) {
  const double src = (static_cast<double>(o) + 0.5) * static_cast<double>(in_dim) / static_cast<double>(out_dim) - 0.5;
  double fl = std::floor(src);
  f = src - fl;
  i0 = static_cast<int64_t>(fl);
  i1 = i0 + 1;
  if (i0 < 0) i0 = 0;
  if (i1 < 0) i1 = 0;
  if (i0 > in_dim - 1) i0 = in_dim - 1;
  if (i1 > in_dim - 1) i1 = in_dim - 1;
}
}  // namespace

void bilinear_forward(const double* x, double* y, int64_t B, int64_t C, int64_t H, int64_t W, int64_t Ho,
                      int64_t Wo) {
#pragma omp parallel for schedule(static)
  for (int64_t p = 0; p < B * C * Ho; ++p) {
    const int64_t ho = p % Ho;
    const int64_t bc = p / Ho;
    const double* plane = x + bc * H * W;
    int64_t h0, h1;
    double fh;
    bilinear_taps(ho, H, Ho, h0, h1, fh);
    double* __restrict out = y + p * Wo;
    for (int64_t wo = 0; wo < Wo; ++wo) {
      int64_t w0, w1;
      double fw;
      bilinear_taps(wo, W, Wo, w0, w1, fw);
      const double v00 = plane[h0 * W + w0], v01 = plane[h0 * W + w1];
      const double v10 = plane[h1 * W + w0], v11 = plane[h1 * W + w1];
      out[wo] = (1 - fh) * ((1 - fw) * v00 + fw * v01) + fh * ((1 - fw) * v10 + fw * v11);
    }
  }
}

void bilinear_backward(const double* dy, double* dx, int64_t B, int64_t C, int64_t H, int64_t W, int64_t Ho,
                       int64_t Wo) {
  std::memset(dx, 0, static_cast<size_t>(B * C * H * W) * sizeof(double));
  // Scatter with overlap: parallel only across (b,c) planes, serial inside one.
#pragma omp parallel for schedule(static)
  for (int64_t bc = 0; bc < B * C; ++bc) {
    double* plane = dx + bc * H * W;
    const double* g = dy + bc * Ho * Wo;
    for (int64_t ho = 0; ho < Ho; ++ho) {
      int64_t h0, h1;
      double fh;
      bilinear_taps(ho, H, Ho, h0, h1, fh);
      for (int64_t wo = 0; wo < Wo; ++wo) {
        int64_t w0, w1;
        double fw;
        bilinear_taps(wo, W, Wo, w0, w1, fw);
        const double gv = g[ho * Wo + wo];
        plane[h0 * W + w0] += (1 - fh) * (1 - fw) * gv;
        plane[h0 * W + w1] += (1 - fh) * fw * gv;
        plane[h1 * W + w0] += fh * (1 - fw) * gv;
        plane[h1 * W + w1] += fh * fw * gv;
      }
    }
  }
}

void softmax_rows(const double* x, double* y, int64_t R, int64_t C) {
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < R; ++r) {
    const double* __restrict in = x + r * C;
    double* __restrict out = y + r * C;
    double mx = in[0];
    for (int64_t c = 1; c < C; ++c) mx = std::max(mx, in[c]);
    double s = 0.0;
    for (int64_t c = 0; c < C; ++c) {
      out[c] = std::exp(in[c] - mx);
      s += out[c];
    }
    const double inv = 1.0 / s;
#pragma omp simd
    for (int64_t c = 0; c < C; ++c) out[c] *= inv;
  }
}

void softmax_rows_backward(const double* y, const double* dy, double* dx, int64_t R, int64_t C) {
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < R; ++r) {
    const double* __restrict yr = y + r * C;
    const double* __restrict gr = dy + r * C;
    double dot = 0.0;
    for (int64_t c = 0; c < C; ++c) dot += yr[c] * gr[c];
    double* __restrict out = dx + r * C;
#pragma omp simd
    for (int64_t c = 0; c < C; ++c) out[c] = yr[c] * (gr[c] - dot);
  }
}

double sum_det(const double* x, int64_t n) {
  constexpr int64_t kChunk = 4096;
  const int64_t nchunks = (n + kChunk - 1) / kChunk;
  if (nchunks <= 1) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::vector<double> partial(static_cast<size_t>(nchunks));
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nchunks; ++c) {
    const int64_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
    double s = 0.0;
    for (int64_t i = lo; i < hi; ++i) s += x[i];
    partial[static_cast<size_t>(c)] = s;
  }
  double s = 0.0;
  for (double v : partial) s += v;
  return s;
}

double dot_det(const double* a, const double* b, int64_t n) {
  constexpr int64_t kChunk = 4096;
  const int64_t nchunks = (n + kChunk - 1) / kChunk;
  if (nchunks <= 1) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  }
  std::vector<double> partial(static_cast<size_t>(nchunks));
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nchunks; ++c) {
    const int64_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
    double s = 0.0;
    for (int64_t i = lo; i < hi; ++i) s += a[i] * b[i];
    partial[static_cast<size_t>(c)] = s;
  }
  double s = 0.0;
  for (double v : partial) s += v;
  return s;
}

}  // namespace mptp::kernels
