// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/ppe/ppe.hpp"

#include <stdexcept>
#include <string>

namespace mptp::ppe {

void PpeConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("ppe config: " + msg); };
  if (base_channels <= 0) fail("base_channels must be positive");
  if (image_h % 16 != 0 || image_w % 16 != 0)
    fail("image size " + std::to_string(image_h) + "x" + std::to_string(image_w) + " must be a multiple of 16");
  for (int i = 0; i < 3; ++i) {
    if (patch_sizes[static_cast<size_t>(i)] <= 0) fail("patch sizes must be positive");
    if (embed_dims[static_cast<size_t>(i)] <= 0) fail("embed dims must be positive");
    if (heads[static_cast<size_t>(i)] <= 0) fail("heads must be positive");
    if (embed_dims[static_cast<size_t>(i)] % heads[static_cast<size_t>(i)] != 0)
      fail("embed dim " + std::to_string(embed_dims[static_cast<size_t>(i)]) + " not divisible by heads " +
           std::to_string(heads[static_cast<size_t>(i)]));
  }
  const int64_t scale_h[3] = {image_h, image_h / 2, image_h / 4};
  const int64_t scale_w[3] = {image_w, image_w / 2, image_w / 4};
  for (int i = 0; i < 3; ++i) {
    const int64_t p = patch_sizes[static_cast<size_t>(i)];
    if (scale_h[i] % p != 0 || scale_w[i] % p != 0)
      fail("patch size " + std::to_string(p) + " does not tile level " + std::to_string(i + 1));
    if (scale_h[i] / p != tokens_h() || scale_w[i] / p != tokens_w())
      fail("token grids differ across levels; H/p1=(H/2)/p2=(H/4)/p3 must hold");
  }
  if (mlp_ratio <= 0) fail("mlp_ratio must be positive");
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0,1)");
  if (text_len <= 0) fail("text_len must be positive");
}

namespace {
// (B, D, g_h, g_w) map from row-major (B, N, D) tokens.
Variable tokens_to_map(const Variable& tokens, int64_t gh, int64_t gw) {
  Variable t = ops::permute(tokens, {0, 2, 1});  // (B, D, N)
  return ops::reshape(t, {t.dim(0), t.dim(1), gh, gw});
}

// (B, N, D) tokens from a (B, D, H, W) map with H*W == N, row-major.
Variable map_to_tokens(const Variable& map) {
  Variable t = ops::reshape(map, {map.dim(0), map.dim(1), map.dim(2) * map.dim(3)});
  return ops::permute(t, {0, 2, 1});
}

// ConvBn1d acts on (B, C, L); tokens live as (B, N, D).
Variable convbn_tokens(nn::ConvBn1d& layer, const Variable& tokens) {
  Variable t = ops::permute(tokens, {0, 2, 1});
  t = layer.forward(t);
  return ops::permute(t, {0, 2, 1});
}
}  // namespace

ImageBranch::ImageBranch(int64_t c)
    : stem_(3, c, 3, 1, 1), down1_(c, 2 * c, 3, 1, 1), down2_(2 * c, 4 * c, 3, 1, 1) {
  reg_child("stem", &stem_);
  reg_child("down1", &down1_);
  reg_child("down2", &down2_);
}

std::array<Variable, 3> ImageBranch::forward(const Variable& x_img) {
  if (x_img.value().rank() != 4 || x_img.dim(1) != 3)
    throw std::invalid_argument("image branch expects (B,3,H,W), got " + x_img.value().shape_str());
  if (x_img.dim(2) % 4 != 0 || x_img.dim(3) % 4 != 0)
    throw std::invalid_argument("image spatial dims must be divisible by 4, got " + x_img.value().shape_str());
  Variable x1 = stem_.forward(x_img);
  Variable x2 = ops::maxpool2x2(down1_.forward(x1));
  Variable x3 = ops::maxpool2x2(down2_.forward(x2));
  return {x1, x2, x3};
}

DownVit1::DownVit1(const PpeConfig& cfg)
    : patch_(cfg.base_channels, cfg.embed_dims[0], cfg.patch_sizes[0], cfg.patch_sizes[0], 0, /*bias=*/true),
      text_proj_(cfg.embed_dims[0], cfg.embed_dims[0]),
      seq_align_(cfg.text_len, cfg.token_count(), /*bias=*/true),
      block_(cfg.embed_dims[0], cfg.heads[0], cfg.mlp_ratio, cfg.dropout),
      text_len_(cfg.text_len),
      dim_(cfg.embed_dims[0]),
      use_block_(cfg.use_downvit) {
  reg_child("patch", &patch_);
  reg_child("text_proj", &text_proj_);
  reg_child("seq_align", &seq_align_);
  reg_child("block", &block_);
}

Variable DownVit1::forward(const Variable& x1, const Variable& text1) {
  if (text1.value().rank() != 3 || text1.dim(1) != text_len_ || text1.dim(2) != dim_)
    throw std::invalid_argument("level-1 text features must be (B," + std::to_string(text_len_) + "," +
                                std::to_string(dim_) + "), got " + text1.value().shape_str());
  Variable tokens = map_to_tokens(patch_.forward(x1));  // (B, N, D1)
  // Text: ConvBN over channels, then align sequence length L -> N.
  Variable t = text_proj_.forward(ops::permute(text1, {0, 2, 1}));  // (B, D1, L)
  t = seq_align_.forward(t);                                        // (B, D1, N)
  t = ops::permute(t, {0, 2, 1});                                   // (B, N, D1)
  Variable y = ops::add(tokens, t);
  return use_block_ ? block_.forward(y) : y;
}

DownVitNext::DownVitNext(int64_t in_ch, int64_t dim, int64_t prev_dim, int64_t patch, int64_t heads,
                         int64_t mlp_ratio, double dropout, bool use_block)
    : patch_(in_ch, dim, patch, patch, 0, /*bias=*/true),
      block_(dim, heads, mlp_ratio, dropout),
      post_(dim, dim),
      proj_(dim + prev_dim, dim),
      dim_(dim),
      use_block_(use_block) {
  reg_child("patch", &patch_);
  reg_child("block", &block_);
  reg_child("post", &post_);
  reg_child("proj", &proj_);
}

Variable DownVitNext::forward(const Variable& x_level, const Variable& y_prev) {
  Variable tokens = map_to_tokens(patch_.forward(x_level));
  if (tokens.dim(1) != y_prev.dim(1))
    throw std::invalid_argument("token count mismatch: patches " + tokens.value().shape_str() +
                                " vs previous level " + y_prev.value().shape_str());
  Variable z = use_block_ ? block_.forward(tokens) : tokens;
  z = convbn_tokens(post_, z);
  Variable cat = ops::concat({z, y_prev}, 2);  // (B, N, D_i + D_{i-1})
  return convbn_tokens(proj_, cat);
}

UpVitTop::UpVitTop(int64_t dim, int64_t heads, int64_t mlp_ratio, double dropout)
    : block_(dim, heads, mlp_ratio, dropout) {
  reg_child("block", &block_);
}

Variable UpVitTop::forward(const Variable& y) { return block_.forward(y); }

UpVitMid::UpVitMid(int64_t dim, int64_t below_dim, int64_t heads, int64_t mlp_ratio, double dropout)
    : block_(dim, heads, mlp_ratio, dropout), from_below_(below_dim, dim) {
  reg_child("block", &block_);
  reg_child("from_below", &from_below_);
}

Variable UpVitMid::forward(const Variable& y_i, const Variable& y_below) {
  if (y_i.dim(1) != y_below.dim(1))
    throw std::invalid_argument("up path token mismatch: " + y_i.value().shape_str() + " vs " +
                                y_below.value().shape_str());
  return ops::add(block_.forward(y_i), convbn_tokens(from_below_, y_below));
}

FuseScale::FuseScale(int64_t dim, int64_t out_ch) : proj_(dim, out_ch, 1, 1, 0), dim_(dim) {
  reg_child("proj", &proj_);
}

Variable FuseScale::forward(const Variable& y_tokens, const Variable& x_image) {
  const int64_t H = x_image.dim(2), W = x_image.dim(3);
  const int64_t n = y_tokens.dim(1);
  // Token grid proportional to the image plane; both are multiples of the
  // same patch layout, so gh/gw recover from the aspect ratio.
  int64_t gh = 1;
  while (gh * gh * W < n * H) ++gh;  // gh = sqrt(n*H/W)
  if (gh * gh * W != n * H || n % gh != 0)
    throw std::invalid_argument("token count " + std::to_string(n) + " does not form a grid for " +
                                x_image.value().shape_str());
  const int64_t gw = n / gh;
  Variable map = tokens_to_map(y_tokens, gh, gw);
  Variable up = ops::upsample_bilinear(map, H, W);
  return ops::add(proj_.forward(up), x_image);
}

Ppe::Ppe(const PpeConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      image_branch_(cfg.base_channels),
      down_vit1_(cfg),
      down_vit2_(2 * cfg.base_channels, cfg.embed_dims[1], cfg.embed_dims[0], cfg.patch_sizes[1], cfg.heads[1],
                 cfg.mlp_ratio, cfg.dropout, cfg.use_downvit),
      down_vit3_(4 * cfg.base_channels, cfg.embed_dims[2], cfg.embed_dims[1], cfg.patch_sizes[2], cfg.heads[2],
                 cfg.mlp_ratio, cfg.dropout, cfg.use_downvit),
      up_vit3_(cfg.embed_dims[2], cfg.heads[2], cfg.mlp_ratio, cfg.dropout),
      up_vit2_(cfg.embed_dims[1], cfg.embed_dims[2], cfg.heads[1], cfg.mlp_ratio, cfg.dropout),
      up_vit1_(cfg.embed_dims[0], cfg.embed_dims[1], cfg.heads[0], cfg.mlp_ratio, cfg.dropout),
      fuse1_(cfg.embed_dims[0], cfg.base_channels),
      fuse2_(cfg.embed_dims[1], 2 * cfg.base_channels),
      fuse3_(cfg.embed_dims[2], 4 * cfg.base_channels) {
  reg_child("image_branch", &image_branch_);
  reg_child("down_vit1", &down_vit1_);
  reg_child("down_vit2", &down_vit2_);
  reg_child("down_vit3", &down_vit3_);
  reg_child("up_vit3", &up_vit3_);
  reg_child("up_vit2", &up_vit2_);
  reg_child("up_vit1", &up_vit1_);
  reg_child("fuse1", &fuse1_);
  reg_child("fuse2", &fuse2_);
  reg_child("fuse3", &fuse3_);
}

std::array<Variable, 3> Ppe::forward(const Variable& x_img, const Variable& text1) {
  std::array<Variable, 3> x = image_branch_.forward(x_img);
  Variable y1 = down_vit1_.forward(x[0], text1);
  Variable y2 = down_vit2_.forward(x[1], y1);
  Variable y3 = down_vit3_.forward(x[2], y2);
  Variable u3 = y3, u2 = y2, u1 = y1;
  if (cfg_.use_upvit) {
    u3 = up_vit3_.forward(y3);
    u2 = up_vit2_.forward(y2, u3);
    u1 = up_vit1_.forward(y1, u2);
  }
  return {fuse1_.forward(u1, x[0]), fuse2_.forward(u2, x[1]), fuse3_.forward(u3, x[2])};
}

}  // namespace mptp::ppe
