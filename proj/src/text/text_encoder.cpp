// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/text/text_encoder.hpp"

#include <stdexcept>

namespace mptp::text {

TextEncoder::TextEncoder(int64_t embed_dim, int64_t d1)
    : proj4_(embed_dim, 8 * d1, 1, /*bias=*/true),
      proj3_(8 * d1, 4 * d1, 1, /*bias=*/true),
      proj2_(4 * d1, 2 * d1, 1, /*bias=*/true),
      proj1_(2 * d1, d1, 1, /*bias=*/true),
      embed_dim_(embed_dim),
      d1_(d1) {
  reg_child("proj4", &proj4_);
  reg_child("proj3", &proj3_);
  reg_child("proj2", &proj2_);
  reg_child("proj1", &proj1_);
}

std::vector<Variable> TextEncoder::forward(const Variable& x_text) {
  if (x_text.value().rank() != 3 || x_text.dim(2) != embed_dim_)
    throw std::invalid_argument("text encoder expects (B,L," + std::to_string(embed_dim_) + "), got " +
                                x_text.value().shape_str());
  // Channel-first for the conv stack, channel-last on the way out.
  Variable x = ops::permute(x_text, {0, 2, 1});  // (B, 768, L)
  Variable l4 = proj4_.forward(x);
  Variable l3 = proj3_.forward(l4);
  Variable l2 = proj2_.forward(l3);
  Variable l1 = proj1_.forward(l2);
  auto to_tokens = [](const Variable& v) { return ops::permute(v, {0, 2, 1}); };
  return {to_tokens(l1), to_tokens(l2), to_tokens(l3), to_tokens(l4)};
}

}  // namespace mptp::text
