// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mptp/core/ops.hpp"

namespace mptp::losses {

struct LossConfig {
  double w1 = 0.5;            // positive-pixel weight
  double w2 = 0.5;            // negative-pixel weight
  double smooth = 1e-12;      // Laplace smoothing in the dice term
  double clamp_eps = 1e-7;    // probability clamp for the BCE log terms
  bool canonical_dice = false;  // opt-in standard 2*|X∩Y|/(|X|+|Y|) form
};

// Per-pixel -[y log p + (1-y) log(1-p)] with p clamped to
// [clamp_eps, 1-clamp_eps]. No reduction; the weighted reductions below are
// the only consumers. This is the single place probabilities are clamped.
Variable bce_map(const Variable& pred, const Variable& target, const LossConfig& cfg);

// Per sample: w1 * sum(pos-pixel bce)/pos_count + w2 * sum(neg)/neg_count,
// with an absent class contributing zero (0/0 -> 0); mean over the batch.
Variable wbce(const Variable& pred, const Variable& target, const LossConfig& cfg);

// 1 - mean_b (w1*w2*sum(p*y) + s) / (w1*sum(p^2) + w2*sum(y^2) + s).
// Implemented exactly as written, including the 0.75 floor at a perfect
// binary match; set cfg.canonical_dice for the standard (2*sum(p*y)+s) /
// (sum(p^2)+sum(y^2)+s) numerator/denominator instead. Predictions are NOT
// clamped here: an exactly-zero prediction against an empty mask must give
// term 1 and loss 0.
Variable wdice(const Variable& pred, const Variable& target, const LossConfig& cfg);

// 0.5 * wbce + 0.5 * wdice. Perfect binary match => 0.375 (verbatim dice).
Variable total_loss(const Variable& pred, const Variable& target, const LossConfig& cfg);

}  // namespace mptp::losses
