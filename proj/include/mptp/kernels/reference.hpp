// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

// Straight-line serial implementations of the hot kernels. Deliberately naive:
// these are the ground truth the parallel kernels are tested against, and the
// baseline side of the benchmark. Signatures mirror mptp::kernels.
namespace mptp::refk {

void gemm_nn(int64_t M, int64_t N, int64_t K, const double* A, const double* B, double* C, bool accumulate);
void gemm_nt(int64_t M, int64_t N, int64_t K, const double* A, const double* B, double* C, bool accumulate);
void gemm_tn(int64_t M, int64_t N, int64_t K, const double* A, const double* B, double* C, bool accumulate);

void conv2d_forward(const double* x, const double* w, const double* bias, double* y, int64_t B, int64_t Ci,
                    int64_t H, int64_t W, int64_t Co, int64_t kh, int64_t kw, int64_t stride, int64_t pad);
void conv2d_backward_input(const double* dy, const double* w, double* dx, int64_t B, int64_t Ci, int64_t H,
                           int64_t W, int64_t Co, int64_t kh, int64_t kw, int64_t stride, int64_t pad);
void conv2d_backward_weights(const double* dy, const double* x, double* dw, double* dbias, int64_t B, int64_t Ci,
                             int64_t H, int64_t W, int64_t Co, int64_t kh, int64_t kw, int64_t stride, int64_t pad);

void maxpool2x2_forward(const double* x, double* y, int64_t* argmax, int64_t B, int64_t C, int64_t H, int64_t W);
void bilinear_forward(const double* x, double* y, int64_t B, int64_t C, int64_t H, int64_t W, int64_t Ho, int64_t Wo);
void softmax_rows(const double* x, double* y, int64_t R, int64_t C);
double sum(const double* x, int64_t n);

}  // namespace mptp::refk
