// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

// OpenMP-parallel numeric kernels. Parallelism is only ever over independent
// output elements (or whole planes), and reductions use fixed-size chunks, so
// results are bitwise identical for any thread count. Serial counterparts live
// in mptp::refk (kernels/reference.hpp) and back the tests and the benchmark.
namespace mptp::kernels {

// C (+)= A(M,K) * B(K,N), all row-major. accumulate=false overwrites C.
void gemm_nn(int64_t M, int64_t N, int64_t K, const double* A, const double* B, double* C, bool accumulate);
// C (+)= A(M,K) * B(N,K)^T
void gemm_nt(int64_t M, int64_t N, int64_t K, const double* A, const double* B, double* C, bool accumulate);
// C (+)= A(K,M)^T * B(K,N)
void gemm_tn(int64_t M, int64_t N, int64_t K, const double* A, const double* B, double* C, bool accumulate);

// y(B,Co,Ho,Wo) = conv2d(x(B,Ci,H,W), w(Co,Ci,kh,kw)) + bias(Co|null), zero padding.
void conv2d_forward(const double* x, const double* w, const double* bias, double* y, int64_t B, int64_t Ci,
                    int64_t H, int64_t W, int64_t Co, int64_t kh, int64_t kw, int64_t stride, int64_t pad);
// dx gets the full gradient (overwritten), computed as a race-free gather.
void conv2d_backward_input(const double* dy, const double* w, double* dx, int64_t B, int64_t Ci, int64_t H,
                           int64_t W, int64_t Co, int64_t kh, int64_t kw, int64_t stride, int64_t pad);
// dw/dbias accumulated (+=) so batches of calls can share gradient buffers.
void conv2d_backward_weights(const double* dy, const double* x, double* dw, double* dbias, int64_t B, int64_t Ci,
                             int64_t H, int64_t W, int64_t Co, int64_t kh, int64_t kw, int64_t stride, int64_t pad);

// 2x2 stride-2 max pooling; argmax holds flat input offsets for the backward pass.
void maxpool2x2_forward(const double* x, double* y, int64_t* argmax, int64_t B, int64_t C, int64_t H, int64_t W);
void maxpool2x2_backward(const double* dy, const int64_t* argmax, double* dx, int64_t n_out, int64_t n_in);

// Bilinear interpolation, align_corners=false (half-pixel centers), edge clamped.
void bilinear_forward(const double* x, double* y, int64_t B, int64_t C, int64_t H, int64_t W, int64_t Ho, int64_t Wo);
void bilinear_backward(const double* dy, double* dx, int64_t B, int64_t C, int64_t H, int64_t W, int64_t Ho, int64_t Wo);

// Row-wise softmax over x(R,C); backward takes y = softmax(x).
void softmax_rows(const double* x, double* y, int64_t R, int64_t C);
void softmax_rows_backward(const double* y, const double* dy, double* dx, int64_t R, int64_t C);

// Deterministic reductions: fixed 4096-element chunks summed in index order.
double sum_det(const double* x, int64_t n);
double dot_det(const double* a, const double* b, int64_t n);

}  // namespace mptp::kernels
