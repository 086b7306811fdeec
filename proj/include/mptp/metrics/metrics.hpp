// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "mptp/core/tensor.hpp"

namespace mptp::metrics {

struct ConfusionCounts {
  int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  int64_t total() const { return tp + fp + fn + tn; }
};

// Exact pixel counts over strictly binary masks; any value other than 0.0 or
// 1.0 is a contract violation and throws.
ConfusionCounts confusion(const Tensor& pred, const Tensor& target);

// (TP+TN)/total; empty masks are a contract violation.
double accuracy(const ConfusionCounts& c);

// Mean of the two class IoUs. A class absent from both masks has an empty
// union and contributes 1; a 0/0 caused by pure misses contributes 0.
double miou(const ConfusionCounts& c);

// 2|X∩Y| / (|X|+|Y|); both-empty pairs score 1 by convention.
double dice_score(const Tensor& pred, const Tensor& target);

// TP/(TP+FP) and TP/(TP+FN), each 0 when its denominator is 0.
double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);

// Binarize probabilities at the fixed 0.5 threshold.
Tensor binarize(const Tensor& probs, double threshold = 0.5);

}  // namespace mptp::metrics
