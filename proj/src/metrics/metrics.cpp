// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/metrics/metrics.hpp"

#include <stdexcept>

namespace mptp::metrics {

ConfusionCounts confusion(const Tensor& pred, const Tensor& target) {
  check_same_shape(pred, target, "confusion inputs");
  if (pred.numel() == 0) throw std::invalid_argument("confusion of empty masks");
  ConfusionCounts c;
  const double* p = pred.data();
  const double* t = target.data();
  for (int64_t i = 0; i < pred.numel(); ++i) {
    if ((p[i] != 0.0 && p[i] != 1.0) || (t[i] != 0.0 && t[i] != 1.0))
      throw std::invalid_argument("confusion requires strictly binary masks (values 0 or 1)");
    if (t[i] == 1.0)
      p[i] == 1.0 ? ++c.tp : ++c.fn;
    else
      p[i] == 1.0 ? ++c.fp : ++c.tn;
  }
  return c;
}

double accuracy(const ConfusionCounts& c) {
  if (c.total() <= 0) throw std::invalid_argument("accuracy of empty confusion counts");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double miou(const ConfusionCounts& c) {
  const int64_t pos_union = c.tp + c.fp + c.fn;
  const int64_t neg_union = c.tn + c.fn + c.fp;
  const double iou_pos = pos_union == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(pos_union);
  const double iou_neg = neg_union == 0 ? 1.0 : static_cast<double>(c.tn) / static_cast<double>(neg_union);
  return 0.5 * (iou_pos + iou_neg);
}

double dice_score(const Tensor& pred, const Tensor& target) {
  const ConfusionCounts c = confusion(pred, target);
  const int64_t size_sum = 2 * c.tp + c.fp + c.fn;  // |X| + |Y|
  if (size_sum == 0) return 1.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(size_sum);
}

double precision(const ConfusionCounts& c) {
  const int64_t den = c.tp + c.fp;
  return den == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(den);
}

double recall(const ConfusionCounts& c) {
  const int64_t den = c.tp + c.fn;
  return den == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(den);
}

Tensor binarize(const Tensor& probs, double threshold) {
  Tensor out(probs.shape());
  const double* p = probs.data();
  double* o = out.data();
  for (int64_t i = 0; i < probs.numel(); ++i) o[i] = p[i] > threshold ? 1.0 : 0.0;
  return out;
}

}  // namespace mptp::metrics
