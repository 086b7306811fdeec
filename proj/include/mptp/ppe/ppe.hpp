// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mptp/nn/layers.hpp"

namespace mptp::ppe {

// Hyperparameters for the text-conditioned encoder. The three transformer
// levels must share one token grid: H/p1 == (H/2)/p2 == (H/4)/p3; that
// equality is what lets level outputs concatenate along the embedding axis.
struct PpeConfig {
  int64_t base_channels = 64;  // C: image pyramid starts at C and doubles
  int64_t image_h = 224;
  int64_t image_w = 224;
  std::array<int64_t, 3> patch_sizes = {16, 8, 4};
  std::array<int64_t, 3> embed_dims = {64, 128, 256};
  std::array<int64_t, 3> heads = {2, 4, 8};
  int64_t mlp_ratio = 4;
  double dropout = 0.1;
  int64_t text_len = 32;
  bool use_downvit = true;  // off: transformer blocks inside DownViTs skipped
  bool use_upvit = true;    // off: the whole up path is skipped (U_i = Y_i)

  void validate() const;  // throws std::invalid_argument with the violated rule
  int64_t tokens_h() const { return image_h / patch_sizes[0]; }
  int64_t tokens_w() const { return image_w / patch_sizes[0]; }
  int64_t token_count() const { return tokens_h() * tokens_w(); }
};

// ConvBN stem + two DownBlocks (ConvBN then 2x2 max-pool):
// (B,3,H,W) -> X1 (B,C,H,W), X2 (B,2C,H/2,W/2), X3 (B,4C,H/4,W/4).
class ImageBranch : public nn::Module {
public:
  explicit ImageBranch(int64_t base_channels);
  std::array<Variable, 3> forward(const Variable& x_img);

private:
  nn::ConvBn2d stem_, down1_, down2_;
};

// Level-1 entry: patch-embed the image features, mix in the caption features
// (ConvBN over channels, learned length alignment L -> N, elementwise add),
// then one pre-norm MSA+MLP block.
class DownVit1 : public nn::Module {
public:
  DownVit1(const PpeConfig& cfg);
  Variable forward(const Variable& x1, const Variable& text1);

  nn::TransformerBlock& block() { return block_; }

private:
  nn::Conv2d patch_;
  nn::ConvBn1d text_proj_;
  nn::Linear seq_align_;
  nn::TransformerBlock block_;
  int64_t text_len_, dim_;
  bool use_block_;
};

// Levels 2 and 3: patch-embed, transformer block, ConvBN on the block output,
// concat with the previous level's tokens along the embedding axis, then a
// ConvBN projection restoring the level width.
class DownVitNext : public nn::Module {
public:
  DownVitNext(int64_t in_ch, int64_t dim, int64_t prev_dim, int64_t patch, int64_t heads, int64_t mlp_ratio,
              double dropout, bool use_block);
  Variable forward(const Variable& x_level, const Variable& y_prev);

private:
  nn::Conv2d patch_;
  nn::TransformerBlock block_;
  nn::ConvBn1d post_, proj_;
  int64_t dim_;
  bool use_block_;
};

// Top of the up path: transformer only.
class UpVitTop : public nn::Module {
public:
  UpVitTop(int64_t dim, int64_t heads, int64_t mlp_ratio, double dropout);
  Variable forward(const Variable& y);

private:
  nn::TransformerBlock block_;
};

// Middle/bottom of the up path: transformer on Y_i plus a ConvBN projection
// of the level below, combined by elementwise sum.
class UpVitMid : public nn::Module {
public:
  UpVitMid(int64_t dim, int64_t below_dim, int64_t heads, int64_t mlp_ratio, double dropout);
  Variable forward(const Variable& y_i, const Variable& y_below);

private:
  nn::TransformerBlock block_;
  nn::ConvBn1d from_below_;
};

// Token grid -> spatial map, bilinear upsample to the image-branch scale,
// ConvBN to that scale's channel count, residual add.
class FuseScale : public nn::Module {
public:
  FuseScale(int64_t dim, int64_t out_ch);
  Variable forward(const Variable& y_tokens, const Variable& x_image);

private:
  nn::ConvBn2d proj_;
  int64_t dim_;
};

// The full encoder: image pyramid + 3-level U-shaped transformer conditioned
// on caption features, emitting a FeaturePyramid [y1, y2, y3] with shapes
// (B,C,H,W), (B,2C,H/2,W/2), (B,4C,H/4,W/4).
class Ppe : public nn::Module {
public:
  explicit Ppe(const PpeConfig& cfg);
  // text1: (B, text_len, D1), the narrowest text pyramid level.
  std::array<Variable, 3> forward(const Variable& x_img, const Variable& text1);

  const PpeConfig& config() const { return cfg_; }
  DownVit1& down_vit1() { return down_vit1_; }

private:
  PpeConfig cfg_;
  ImageBranch image_branch_;
  DownVit1 down_vit1_;
  DownVitNext down_vit2_, down_vit3_;
  UpVitTop up_vit3_;
  UpVitMid up_vit2_, up_vit1_;
  FuseScale fuse1_, fuse2_, fuse3_;
};

}  // namespace mptp::ppe
