// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "mptp/core/rng.hpp"
#include "mptp/core/variable.hpp"

// Differentiable tensor ops. Each builds one tape node; shapes are validated
// eagerly so failures point at the offending op, not a downstream kernel.
namespace mptp::ops {

Variable add(const Variable& a, const Variable& b);
Variable sub(const Variable& a, const Variable& b);
Variable mul(const Variable& a, const Variable& b);
Variable div(const Variable& a, const Variable& b);
Variable add_scalar(const Variable& a, double s);
Variable mul_scalar(const Variable& a, double s);

Variable relu(const Variable& a);
Variable gelu(const Variable& a);
Variable sigmoid(const Variable& a);
Variable log(const Variable& a);
Variable sqrt(const Variable& a);
Variable clamp(const Variable& a, double lo, double hi);

Variable sum_all(const Variable& a);   // -> (1,)
Variable mean_all(const Variable& a);  // -> (1,)
// (B, ...) -> (B,): sum over all trailing dims per sample
Variable sum_per_sample(const Variable& a);

// a(M,K) x b(K,N) -> (M,N)
Variable matmul(const Variable& a, const Variable& b);
// a(G,M,K) x b(G,K,N) -> (G,M,N)
Variable bmm(const Variable& a, const Variable& b);
// a(G,M,K) x b(G,N,K)^T -> (G,M,N)
Variable bmm_nt(const Variable& a, const Variable& b);
// W(M,K) shared over batch: x(G,K,N) -> (G,M,N)
Variable matmul_bcast(const Variable& w, const Variable& x);
// x(...,in) x W(out,in)^T + b -> (...,out); leading dims flattened
Variable linear(const Variable& x, const Variable& w, const Variable& b);

// x(B,Ci,H,W), w(Co,Ci,kh,kw), optional bias(Co); square stride/pad
Variable conv2d(const Variable& x, const Variable& w, const Variable& b, int64_t stride, int64_t pad);
Variable maxpool2x2(const Variable& x);
Variable global_avg_pool(const Variable& x);  // (B,C,H,W) -> (B,C)
Variable global_max_pool(const Variable& x);  // (B,C,H,W) -> (B,C)
Variable broadcast_spatial(const Variable& v, int64_t H, int64_t W);  // (B,C) -> (B,C,H,W)
Variable upsample_bilinear(const Variable& x, int64_t Ho, int64_t Wo);

Variable softmax_lastdim(const Variable& x);
Variable layernorm_lastdim(const Variable& x, const Variable& gamma, const Variable& beta, double eps);
// x(B,C,...): per-channel batch norm. Training mode uses batch statistics and
// updates the running buffers in place; eval mode reads them.
Variable batchnorm(const Variable& x, const Variable& gamma, const Variable& beta, Tensor& running_mean,
                   Tensor& running_var, double momentum, double eps, bool training);

Variable reshape(const Variable& x, Shape shape);
Variable permute(const Variable& x, const std::vector<int64_t>& dims);
Variable concat(const std::vector<Variable>& xs, int64_t axis);

// Channels-last 2x2 block rearrangements (patch merge/expand cores).
// Slice offsets are fixed to (0,0),(1,0),(0,1),(1,1) in that order.
Variable space_to_depth_2x2(const Variable& x_nhwc);  // (B,H,W,C) -> (B,H/2,W/2,4C)
Variable depth_to_space_2x2(const Variable& x_nhwc);  // (B,H,W,4c) -> (B,2H,2W,c)

// Inverted-probability dropout; p == 0 is an exact identity and draws no RNG.
Variable dropout(const Variable& x, double p, Rng& rng);

Variable constant(Tensor t);  // no-grad leaf

}  // namespace mptp::ops
