// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mptp/core/tensor.hpp"

namespace mptp::pretrain {

struct AugmentOp {
  std::string name;  // whitelist below
  double prob = 0.0;
  double magnitude = 0.0;
};

// Caption text can encode positions, so any geometric op (flip, crop, ...)
// is rejected outright; the whitelist is photometric only:
//   brightness-jitter  add delta ~ U(-m, m)
//   contrast-jitter    (x - mean) * (1 + delta) + mean, delta ~ U(-m, m)
//   gaussian-noise     add N(0, m) per pixel
//   gaussian-blur      separable 5-tap kernel, sigma ~ U(0.1, max(0.1, m))
//   grayscale-mix      blend toward the channel mean with alpha ~ U(0, m)
// Values are clamped to [0,1] after each applied op.
struct AugmentationPolicy {
  std::vector<AugmentOp> ops;
  uint64_t rng_seed = 0;
};

// Throws std::invalid_argument on flip/crop (explicitly) or any unknown op.
void validate_policy(const AugmentationPolicy& policy);

// One augmented view of a (1,3,H,W) image. Deterministic: the stream is keyed
// by (policy.rng_seed, epoch, sample_index, view).
Tensor augment_view(const Tensor& img, const AugmentationPolicy& policy, int64_t epoch, int64_t sample_index,
                    int64_t view);

std::pair<Tensor, Tensor> augment_pair(const Tensor& img, const AugmentationPolicy& policy, int64_t epoch,
                                       int64_t sample_index);

}  // namespace mptp::pretrain
