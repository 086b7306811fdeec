// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "mptp/core/ops.hpp"
#include "mptp/core/rng.hpp"
#include "mptp/nn/module.hpp"

namespace mptp::nn {

// Process-global dropout stream. Counter-based, so checkpointing the pair
// (seed, counter) is enough to resume the exact masks.
Rng& dropout_stream();
void reset_dropout_stream(uint64_t seed, uint64_t counter = 0);

class Linear : public Module {
public:
  Linear(int64_t in_features, int64_t out_features, bool bias);
  Variable forward(const Variable& x);
  Variable& weight() { return w_; }

private:
  Variable& w_;
  Variable b_;  // undefined when bias == false
};

class Conv2d : public Module {
public:
  Conv2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int64_t stride, int64_t pad, bool bias);
  Variable forward(const Variable& x);

private:
  Variable& w_;
  Variable b_;
  int64_t stride_, pad_;
};

// Pointwise (kernel 1) 1-D convolution over (B, C, L). The text pyramid and
// token projections never need wider kernels, so anything else is rejected.
class Conv1d : public Module {
public:
  Conv1d(int64_t in_ch, int64_t out_ch, int64_t kernel, bool bias);
  Variable forward(const Variable& x);

private:
  Variable& w_;
  Variable b_;
};

class BatchNorm : public Module {
public:
  explicit BatchNorm(int64_t channels, double momentum = 0.1, double eps = 1e-5);
  // Input (B, C, ...); uses batch stats iff training and not frozen.
  Variable forward(const Variable& x);

private:
  Variable& gamma_;
  Variable& beta_;
  Tensor& running_mean_;
  Tensor& running_var_;
  double momentum_, eps_;
};

class LayerNorm : public Module {
public:
  explicit LayerNorm(int64_t dim, double eps = 1e-5);
  Variable forward(const Variable& x);

private:
  Variable& gamma_;
  Variable& beta_;
  double eps_;
};

// Inverted dropout fed by the global stream. Identity in eval mode or at p=0
// (and then it draws nothing, keeping RNG replay aligned).
class Dropout : public Module {
public:
  explicit Dropout(double p) : p_(p) {}
  Variable forward(const Variable& x);

private:
  double p_;
};

// Conv(bias off) + BatchNorm + ReLU. Bias stays off on purpose: BN's mean
// subtraction makes a conv bias both redundant and zero-gradient, which would
// break the everything-gets-a-gradient training invariant.
class ConvBn2d : public Module {
public:
  ConvBn2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int64_t stride, int64_t pad);
  Variable forward(const Variable& x);

private:
  Conv2d conv_;
  BatchNorm bn_;
};

// Pointwise Conv1d(bias off) + BatchNorm + ReLU over (B, C, L).
class ConvBn1d : public Module {
public:
  ConvBn1d(int64_t in_ch, int64_t out_ch);
  Variable forward(const Variable& x);

private:
  Conv1d conv_;
  BatchNorm bn_;
};

// Transformer feed-forward: fc1 -> GELU -> drop -> fc2 -> drop.
class Mlp : public Module {
public:
  Mlp(int64_t dim, int64_t hidden, double dropout_p);
  Variable forward(const Variable& x);

private:
  Linear fc1_, fc2_;
  Dropout drop_;
};

// Multi-head self-attention on (B, N, D) with no positional terms.
class Msa : public Module {
public:
  Msa(int64_t dim, int64_t heads, double dropout_p);
  Variable forward(const Variable& x);

  // Debug hook: when enabled, the last forward's softmaxed attention is kept
  // as a (B*heads, N, N) tensor.
  void set_capture_attention(bool on) { capture_attention_ = on; }
  const Tensor& last_attention() const { return last_attention_; }

private:
  Linear q_, k_, v_, proj_;
  Dropout drop_;
  int64_t dim_, heads_;
  bool capture_attention_ = false;
  Tensor last_attention_;
};

// Pre-norm residual pair: x += MSA(LN(x)); x += MLP(LN(x)).
class TransformerBlock : public Module {
public:
  TransformerBlock(int64_t dim, int64_t heads, int64_t mlp_ratio, double dropout_p);
  Variable forward(const Variable& x);
  Msa& msa() { return msa_; }

private:
  LayerNorm ln1_, ln2_;
  Msa msa_;
  Mlp mlp_;
};

}  // namespace mptp::nn
