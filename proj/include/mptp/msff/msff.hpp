// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <memory>
#include <vector>

#include "mptp/nn/layers.hpp"

namespace mptp::msff {

// Halve the grid, double the channels: (B,C,H,W) -> (B,2C,H/2,W/2).
// Channels-last, four stride-2 slices at offsets (0,0),(1,0),(0,1),(1,1)
// concatenated to 4C, LayerNorm, Linear 4C->2C, channels-first again.
// The slice-concat step is a pure rearrangement (tests rely on that).
class PatchMerge : public nn::Module {
public:
  explicit PatchMerge(int64_t in_ch);
  Variable forward(const Variable& x);
  // The rearrangement alone, exposed for the value-multiset oracle.
  static Variable slice_concat(const Variable& x);

private:
  nn::LayerNorm norm_;
  nn::Linear reduce_;
};

// Double the grid, halve the channels: (B,C,H,W) -> (B,C/2,2H,2W).
// Linear C->2C, LayerNorm, then distribute 2C over a 2x2 spatial block
// (C/2 channels each), with the same fixed offset order as PatchMerge.
class PatchExpand : public nn::Module {
public:
  explicit PatchExpand(int64_t in_ch);
  Variable forward(const Variable& x);

private:
  nn::Linear expand_;
  nn::LayerNorm norm_;
};

// Cross-scale fusion: rescales every pyramid level to every scale and
// concatenates per scale, tripling each level's channel count.
//   t1 = [y1, expand(y2), expand(expand(y3))]            -> (B, 3C, H, W)
//   t2 = [merge(y1), y2, expand(y3)]                     -> (B, 6C, H/2, W/2)
//   t3 = [merge(merge(y1)), merge(y2), y3]               -> (B, 12C, H/4, W/4)
// Six independent merge/expand instances, no parameter sharing.
//
// With `enabled == false` (ablation) the rescaling machinery is replaced by
// per-level pointwise ConvBNs that only match the output channel counts.
class Msff : public nn::Module {
public:
  Msff(int64_t base_ch, bool enabled);

  // groups[k][s]: source level k+1 rescaled to scale s+1; every group holds
  // shapes (B,C,H,W), (B,2C,H/2,W/2), (B,4C,H/4,W/4) in that order.
  std::array<std::array<Variable, 3>, 3> build_groups(const Variable& y1, const Variable& y2, const Variable& y3);

  static std::array<Variable, 3> fuse_groups(const std::array<std::array<Variable, 3>, 3>& groups);

  // build_groups + fuse_groups (or the bypass projections when disabled).
  std::array<Variable, 3> forward(const Variable& y1, const Variable& y2, const Variable& y3);

  bool enabled() const { return enabled_; }

private:
  bool enabled_;
  // merge.0: C->2C on y1; merge.1: 2C->4C on merge(y1); merge.2: 2C->4C on y2
  // expand.0: 2C->C on y2; expand.1: 4C->2C on y3; expand.2: 2C->C on expand(y3)
  std::unique_ptr<PatchMerge> merge0_, merge1_, merge2_;
  std::unique_ptr<PatchExpand> expand0_, expand1_, expand2_;
  std::unique_ptr<nn::ConvBn2d> proj1_, proj2_, proj3_;  // bypass path
};

}  // namespace mptp::msff
