// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/msff/msff.hpp"

#include <stdexcept>

namespace mptp::msff {

PatchMerge::PatchMerge(int64_t in_ch) : norm_(4 * in_ch), reduce_(4 * in_ch, 2 * in_ch, /*bias=*/true) {
  reg_child("norm", &norm_);
  reg_child("reduce", &reduce_);
}

Variable PatchMerge::slice_concat(const Variable& x) {
  if (x.value().rank() != 4)
    throw std::invalid_argument("patch merge expects (B,C,H,W), got " + x.value().shape_str());
  if (x.dim(2) % 2 != 0 || x.dim(3) % 2 != 0)
    throw std::invalid_argument("patch merge needs even spatial dims, got " + x.value().shape_str());
  Variable t = ops::permute(x, {0, 2, 3, 1});  // (B,H,W,C)
  return ops::space_to_depth_2x2(t);           // (B,H/2,W/2,4C)
}

Variable PatchMerge::forward(const Variable& x) {
  Variable t = slice_concat(x);
  t = norm_.forward(t);
  t = reduce_.forward(t);               // (B,H/2,W/2,2C)
  return ops::permute(t, {0, 3, 1, 2});  // (B,2C,H/2,W/2)
}

PatchExpand::PatchExpand(int64_t in_ch) : expand_(in_ch, 2 * in_ch, /*bias=*/true), norm_(2 * in_ch) {
  if (in_ch % 2 != 0)
    throw std::invalid_argument("patch expand needs even channels, got " + std::to_string(in_ch));
  reg_child("expand", &expand_);
  reg_child("norm", &norm_);
}

Variable PatchExpand::forward(const Variable& x) {
  if (x.value().rank() != 4)
    throw std::invalid_argument("patch expand expects (B,C,H,W), got " + x.value().shape_str());
  Variable t = ops::permute(x, {0, 2, 3, 1});  // (B,H,W,C)
  t = expand_.forward(t);                      // (B,H,W,2C)
  t = norm_.forward(t);
  t = ops::depth_to_space_2x2(t);              // (B,2H,2W,C/2)
  return ops::permute(t, {0, 3, 1, 2});
}

Msff::Msff(int64_t base_ch, bool enabled) : enabled_(enabled) {
  const int64_t c = base_ch;
  if (enabled_) {
    merge0_ = std::make_unique<PatchMerge>(c);
    merge1_ = std::make_unique<PatchMerge>(2 * c);
    merge2_ = std::make_unique<PatchMerge>(2 * c);
    expand0_ = std::make_unique<PatchExpand>(2 * c);
    expand1_ = std::make_unique<PatchExpand>(4 * c);
    expand2_ = std::make_unique<PatchExpand>(2 * c);
    reg_child("merge.0", merge0_.get());
    reg_child("merge.1", merge1_.get());
    reg_child("merge.2", merge2_.get());
    reg_child("expand.0", expand0_.get());
    reg_child("expand.1", expand1_.get());
    reg_child("expand.2", expand2_.get());
  } else {
    proj1_ = std::make_unique<nn::ConvBn2d>(c, 3 * c, 1, 1, 0);
    proj2_ = std::make_unique<nn::ConvBn2d>(2 * c, 6 * c, 1, 1, 0);
    proj3_ = std::make_unique<nn::ConvBn2d>(4 * c, 12 * c, 1, 1, 0);
    reg_child("proj1", proj1_.get());
    reg_child("proj2", proj2_.get());
    reg_child("proj3", proj3_.get());
  }
}

std::array<std::array<Variable, 3>, 3> Msff::build_groups(const Variable& y1, const Variable& y2,
                                                          const Variable& y3) {
  if (!enabled_) throw std::logic_error("build_groups called on a disabled msff");
  Variable y1m = merge0_->forward(y1);
  Variable y3e = expand1_->forward(y3);
  std::array<std::array<Variable, 3>, 3> groups;
  groups[0] = {y1, y1m, merge1_->forward(y1m)};
  groups[1] = {expand0_->forward(y2), y2, merge2_->forward(y2)};
  groups[2] = {expand2_->forward(y3e), y3e, y3};
  return groups;
}

std::array<Variable, 3> Msff::fuse_groups(const std::array<std::array<Variable, 3>, 3>& groups) {
  std::array<Variable, 3> out;
  for (int s = 0; s < 3; ++s)
    out[static_cast<size_t>(s)] = ops::concat(
        {groups[0][static_cast<size_t>(s)], groups[1][static_cast<size_t>(s)], groups[2][static_cast<size_t>(s)]},
        1);
  return out;
}

std::array<Variable, 3> Msff::forward(const Variable& y1, const Variable& y2, const Variable& y3) {
  if (!enabled_) return {proj1_->forward(y1), proj2_->forward(y2), proj3_->forward(y3)};
  return fuse_groups(build_groups(y1, y2, y3));
}

}  // namespace mptp::msff
