// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "mptp/nn/layers.hpp"

namespace mptp::text {

// Pointwise-conv pyramid over caption embeddings: (B, L, 768) in, four levels
// out with channel schedule (D1..D4) = (d1, 2*d1, 4*d1, 8*d1). The widest
// level is produced first (768 -> D4) and successive convolutions narrow it
// (D4 -> D3 -> D2 -> D1); sequence length is preserved everywhere. Plain
// convolutions with bias, no normalization or activation.
class TextEncoder : public nn::Module {
public:
  TextEncoder(int64_t embed_dim, int64_t d1);

  // Returns [level1, level2, level3, level4] with channels (D1, D2, D3, D4),
  // each (B, L, Di). Only level 1 feeds the encoder downstream; the rest are
  // computed for completeness.
  std::vector<Variable> forward(const Variable& x_text);

  int64_t d1() const { return d1_; }

private:
  nn::Conv1d proj4_, proj3_, proj2_, proj1_;
  int64_t embed_dim_, d1_;
};

}  // namespace mptp::text
