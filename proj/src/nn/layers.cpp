// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace mptp::nn {

namespace {
Rng g_dropout_stream(0x6d707470u);  // reseeded by trainers before use
}

Rng& dropout_stream() { return g_dropout_stream; }

void reset_dropout_stream(uint64_t seed, uint64_t counter) { g_dropout_stream = Rng(seed, counter); }

Linear::Linear(int64_t in_features, int64_t out_features, bool bias)
    : w_(reg_param("weight", {out_features, in_features}, InitKind::kHeUniform, in_features)) {
  if (bias) b_ = reg_param("bias", {out_features}, InitKind::kZero);
}

Variable Linear::forward(const Variable& x) { return ops::linear(x, w_, b_); }

Conv2d::Conv2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int64_t stride, int64_t pad, bool bias)
    : w_(reg_param("weight", {out_ch, in_ch, kernel, kernel}, InitKind::kHeUniform, in_ch * kernel * kernel)),
      stride_(stride),
      pad_(pad) {
  if (bias) b_ = reg_param("bias", {out_ch}, InitKind::kZero);
}

Variable Conv2d::forward(const Variable& x) { return ops::conv2d(x, w_, b_, stride_, pad_); }

Conv1d::Conv1d(int64_t in_ch, int64_t out_ch, int64_t kernel, bool bias)
    : w_(reg_param("weight", {out_ch, in_ch, 1}, InitKind::kHeUniform, in_ch)) {
  if (kernel != 1)
    throw std::invalid_argument("Conv1d supports kernel 1 only (pointwise); got kernel " + std::to_string(kernel));
  if (bias) b_ = reg_param("bias", {out_ch}, InitKind::kZero);
}

Variable Conv1d::forward(const Variable& x) {
  if (x.value().rank() != 3)
    throw std::invalid_argument("Conv1d expects (B,C,L) input, got " + x.value().shape_str());
  const int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  // Pointwise conv over length is a 1x1 conv2d over a (L,1) spatial grid.
  Variable x4 = ops::reshape(x, {B, C, L, 1});
  Variable w4 = ops::reshape(w_, {w_.dim(0), C, 1, 1});
  Variable y = ops::conv2d(x4, w4, b_, 1, 0);
  return ops::reshape(y, {B, y.dim(1), L});
}

BatchNorm::BatchNorm(int64_t channels, double momentum, double eps)
    : gamma_(reg_param("weight", {channels}, InitKind::kOne)),
      beta_(reg_param("bias", {channels}, InitKind::kZero)),
      running_mean_(reg_buffer("running_mean", {channels}, BufferInit::kZero)),
      running_var_(reg_buffer("running_var", {channels}, BufferInit::kOne)),
      momentum_(momentum),
      eps_(eps) {}

Variable BatchNorm::forward(const Variable& x) {
  const bool use_batch_stats = training() && !frozen();
  return ops::batchnorm(x, gamma_, beta_, running_mean_, running_var_, momentum_, eps_, use_batch_stats);
}

LayerNorm::LayerNorm(int64_t dim, double eps)
    : gamma_(reg_param("weight", {dim}, InitKind::kOne)),
      beta_(reg_param("bias", {dim}, InitKind::kZero)),
      eps_(eps) {}

Variable LayerNorm::forward(const Variable& x) { return ops::layernorm_lastdim(x, gamma_, beta_, eps_); }

Variable Dropout::forward(const Variable& x) {
  if (!training() || p_ <= 0.0) return x;
  return ops::dropout(x, p_, dropout_stream());
}

ConvBn2d::ConvBn2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int64_t stride, int64_t pad)
    : conv_(in_ch, out_ch, kernel, stride, pad, /*bias=*/false), bn_(out_ch) {
  reg_child("conv", &conv_);
  reg_child("bn", &bn_);
}

Variable ConvBn2d::forward(const Variable& x) { return ops::relu(bn_.forward(conv_.forward(x))); }

ConvBn1d::ConvBn1d(int64_t in_ch, int64_t out_ch) : conv_(in_ch, out_ch, 1, /*bias=*/false), bn_(out_ch) {
  reg_child("conv", &conv_);
  reg_child("bn", &bn_);
}

Variable ConvBn1d::forward(const Variable& x) { return ops::relu(bn_.forward(conv_.forward(x))); }

Mlp::Mlp(int64_t dim, int64_t hidden, double dropout_p)
    : fc1_(dim, hidden, /*bias=*/true), fc2_(hidden, dim, /*bias=*/true), drop_(dropout_p) {
  reg_child("fc1", &fc1_);
  reg_child("fc2", &fc2_);
  reg_child("drop", &drop_);
}

Variable Mlp::forward(const Variable& x) {
  Variable h = drop_.forward(ops::gelu(fc1_.forward(x)));
  return drop_.forward(fc2_.forward(h));
}

Msa::Msa(int64_t dim, int64_t heads, double dropout_p)
    : q_(dim, dim, true), k_(dim, dim, true), v_(dim, dim, true), proj_(dim, dim, true), drop_(dropout_p),
      dim_(dim), heads_(heads) {
  if (dim % heads != 0)
    throw std::invalid_argument("Msa dim " + std::to_string(dim) + " not divisible by heads " +
                                std::to_string(heads));
  reg_child("q", &q_);
  reg_child("k", &k_);
  reg_child("v", &v_);
  reg_child("proj", &proj_);
  reg_child("drop", &drop_);
}

Variable Msa::forward(const Variable& x) {
  if (x.value().rank() != 3 || x.dim(2) != dim_)
    throw std::invalid_argument("Msa expects (B,N," + std::to_string(dim_) + "), got " + x.value().shape_str());
  const int64_t B = x.dim(0), N = x.dim(1);
  const int64_t dh = dim_ / heads_;
  auto split = [&](const Variable& t) {
    // (B,N,D) -> (B*H, N, dh)
    Variable r = ops::reshape(t, {B, N, heads_, dh});
    r = ops::permute(r, {0, 2, 1, 3});
    return ops::reshape(r, {B * heads_, N, dh});
  };
  Variable q = split(q_.forward(x));
  Variable k = split(k_.forward(x));
  Variable v = split(v_.forward(x));
  Variable scores = ops::mul_scalar(ops::bmm_nt(q, k), 1.0 / std::sqrt(static_cast<double>(dh)));
  Variable attn = ops::softmax_lastdim(scores);
  if (capture_attention_) last_attention_ = attn.value();
  Variable ctx = ops::bmm(attn, v);  // (B*H, N, dh)
  ctx = ops::reshape(ctx, {B, heads_, N, dh});
  ctx = ops::permute(ctx, {0, 2, 1, 3});
  ctx = ops::reshape(ctx, {B, N, dim_});
  return drop_.forward(proj_.forward(ctx));
}

TransformerBlock::TransformerBlock(int64_t dim, int64_t heads, int64_t mlp_ratio, double dropout_p)
    : ln1_(dim), ln2_(dim), msa_(dim, heads, dropout_p), mlp_(dim, dim * mlp_ratio, dropout_p) {
  reg_child("ln1", &ln1_);
  reg_child("ln2", &ln2_);
  reg_child("msa", &msa_);
  reg_child("mlp", &mlp_);
}

Variable TransformerBlock::forward(const Variable& x) {
  Variable h = ops::add(x, msa_.forward(ln1_.forward(x)));
  return ops::add(h, mlp_.forward(ln2_.forward(h)));
}

}  // namespace mptp::nn
