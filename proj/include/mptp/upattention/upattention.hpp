// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "mptp/nn/layers.hpp"

namespace mptp::upatt {

// Pooled-gate fusion of a fine map (B,Cf,H,W) with a coarse map
// (B,Cc,H/2,W/2):
//   a) bilinear-upsample coarse to (H,W)
//   b) descriptor = GAP(fine) + GMP(fine), broadcast to (B,Cf,H,W)
//   c) concat [fine, upsampled coarse, descriptor]  (Cf+Cc+Cf channels)
//   d) pointwise conv + ReLU -> Cf-channel gate
//   e) gate * fine
//   f) concat [gated fine, upsampled coarse], two ConvBNs -> Co
// The first ConvBN is a 1x1 channel reduction, the second a 3x3 mixer; doing
// the reduction first keeps the 3x3 work at Co channels.
class UpAttentionBlock : public nn::Module {
public:
  UpAttentionBlock(int64_t fine_ch, int64_t coarse_ch, int64_t out_ch);
  Variable forward(const Variable& fine, const Variable& coarse);

  nn::Conv2d& gate() { return gate_; }

private:
  nn::Conv2d gate_;
  nn::ConvBn2d reduce1_, reduce2_;
  int64_t fine_ch_, coarse_ch_;
};

// Decoder over the fused multiscale maps t1 (B,3C,H,W), t2 (B,6C,H/2,W/2),
// t3 (B,12C,H/4,W/4):
//   inner = block(t2, t3) -> 6C at (H/2,W/2)
//   outer = block(t1, inner) -> 3C at (H,W)
//   mask  = sigmoid(1x1 conv 3C -> 1)
// With `use_attention == false` (ablation) both blocks become plain
// upsample-concat-ConvBN steps of the same widths.
class UpAttentionCascade : public nn::Module {
public:
  UpAttentionCascade(int64_t base_ch, bool use_attention);
  // Returns (B,1,H,W) probabilities.
  Variable forward(const Variable& t1, const Variable& t2, const Variable& t3);

  bool use_attention() const { return use_attention_; }
  UpAttentionBlock& inner() { return *inner_; }
  UpAttentionBlock& outer() { return *outer_; }

private:
  bool use_attention_;
  std::unique_ptr<UpAttentionBlock> inner_, outer_;
  std::unique_ptr<nn::ConvBn2d> plain_inner_, plain_outer_;  // ablation path
  nn::Conv2d mask_head_;
};

}  // namespace mptp::upatt
