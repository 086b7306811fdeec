// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/upattention/upattention.hpp"

#include <stdexcept>

namespace mptp::upatt {

UpAttentionBlock::UpAttentionBlock(int64_t fine_ch, int64_t coarse_ch, int64_t out_ch)
    : gate_(2 * fine_ch + coarse_ch, fine_ch, 1, 1, 0, /*bias=*/true),
      reduce1_(fine_ch + coarse_ch, out_ch, 1, 1, 0),
      reduce2_(out_ch, out_ch, 3, 1, 1),
      fine_ch_(fine_ch),
      coarse_ch_(coarse_ch) {
  reg_child("gate", &gate_);
  reg_child("reduce1", &reduce1_);
  reg_child("reduce2", &reduce2_);
}

Variable UpAttentionBlock::forward(const Variable& fine, const Variable& coarse) {
  if (fine.dim(1) != fine_ch_ || coarse.dim(1) != coarse_ch_)
    throw std::invalid_argument("channel mismatch: fine " + fine.value().shape_str() + ", coarse " +
                                coarse.value().shape_str());
  const int64_t H = fine.dim(2), W = fine.dim(3);
  if (coarse.dim(2) * 2 != H || coarse.dim(3) * 2 != W)
    throw std::invalid_argument("coarse map must be half the fine resolution: fine " + fine.value().shape_str() +
                                ", coarse " + coarse.value().shape_str());
  Variable up = ops::upsample_bilinear(coarse, H, W);
  Variable desc = ops::add(ops::global_avg_pool(fine), ops::global_max_pool(fine));
  Variable desc_map = ops::broadcast_spatial(desc, H, W);
  Variable gate = ops::relu(gate_.forward(ops::concat({fine, up, desc_map}, 1)));
  Variable refined = ops::mul(gate, fine);
  return reduce2_.forward(reduce1_.forward(ops::concat({refined, up}, 1)));
}

UpAttentionCascade::UpAttentionCascade(int64_t base_ch, bool use_attention)
    : use_attention_(use_attention), mask_head_(3 * base_ch, 1, 1, 1, 0, /*bias=*/true) {
  const int64_t c = base_ch;
  if (use_attention_) {
    inner_ = std::make_unique<UpAttentionBlock>(6 * c, 12 * c, 6 * c);
    outer_ = std::make_unique<UpAttentionBlock>(3 * c, 6 * c, 3 * c);
    reg_child("inner", inner_.get());
    reg_child("outer", outer_.get());
  } else {
    plain_inner_ = std::make_unique<nn::ConvBn2d>(18 * c, 6 * c, 3, 1, 1);
    plain_outer_ = std::make_unique<nn::ConvBn2d>(9 * c, 3 * c, 3, 1, 1);
    reg_child("inner", plain_inner_.get());
    reg_child("outer", plain_outer_.get());
  }
  reg_child("mask_head", &mask_head_);
}

Variable UpAttentionCascade::forward(const Variable& t1, const Variable& t2, const Variable& t3) {
  Variable outer;
  if (use_attention_) {
    Variable inner = inner_->forward(t2, t3);
    outer = outer_->forward(t1, inner);
  } else {
    Variable up3 = ops::upsample_bilinear(t3, t2.dim(2), t2.dim(3));
    Variable inner = plain_inner_->forward(ops::concat({t2, up3}, 1));
    Variable up2 = ops::upsample_bilinear(inner, t1.dim(2), t1.dim(3));
    outer = plain_outer_->forward(ops::concat({t1, up2}, 1));
  }
  return ops::sigmoid(mask_head_.forward(outer));
}

}  // namespace mptp::upatt
