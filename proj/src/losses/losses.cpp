// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/losses/losses.hpp"

#include <stdexcept>

#include "mptp/kernels/kernels.hpp"

namespace mptp::losses {

namespace {
void check_pair(const Variable& pred, const Variable& target) {
  check_same_shape(pred.value(), target.value(), "loss inputs");
  if (pred.value().rank() < 2) throw std::invalid_argument("loss inputs must be batched (rank >= 2)");
}
}  // namespace

Variable bce_map(const Variable& pred, const Variable& target, const LossConfig& cfg) {
  check_pair(pred, target);
  Variable p = ops::clamp(pred, cfg.clamp_eps, 1.0 - cfg.clamp_eps);
  Variable ones = ops::constant(Tensor(pred.shape(), 1.0));
  Variable pos = ops::mul(target, ops::log(p));
  Variable neg = ops::mul(ops::sub(ones, target), ops::log(ops::sub(ones, p)));
  return ops::mul_scalar(ops::add(pos, neg), -1.0);
}

Variable wbce(const Variable& pred, const Variable& target, const LossConfig& cfg) {
  check_pair(pred, target);
  const int64_t B = pred.dim(0);
  const int64_t S = pred.numel() / B;
  // Class-count normalizers are functions of the target only, so they enter
  // the graph as constants and the 0/0 -> 0 guard stays differentiable.
  Tensor inv_pos(Shape{B}), inv_neg(Shape{B});
  const double* t = target.value().data();
  for (int64_t b = 0; b < B; ++b) {
    const double pos_sum = kernels::sum_det(t + b * S, S);
    const double neg_sum = static_cast<double>(S) - pos_sum;
    inv_pos[b] = pos_sum > 0.0 ? cfg.w1 / pos_sum : 0.0;
    inv_neg[b] = neg_sum > 0.0 ? cfg.w2 / neg_sum : 0.0;
  }
  Variable bce = bce_map(pred, target, cfg);
  Variable ones = ops::constant(Tensor(pred.shape(), 1.0));
  Variable pos_term = ops::sum_per_sample(ops::mul(target, bce));
  Variable neg_term = ops::sum_per_sample(ops::mul(ops::sub(ones, target), bce));
  Variable per_sample = ops::add(ops::mul(pos_term, ops::constant(std::move(inv_pos))),
                                 ops::mul(neg_term, ops::constant(std::move(inv_neg))));
  return ops::mean_all(per_sample);
}

Variable wdice(const Variable& pred, const Variable& target, const LossConfig& cfg) {
  check_pair(pred, target);
  Variable py = ops::sum_per_sample(ops::mul(pred, target));
  Variable p2 = ops::sum_per_sample(ops::mul(pred, pred));
  Variable y2 = ops::sum_per_sample(ops::mul(target, target));
  Variable num, den;
  if (cfg.canonical_dice) {
    num = ops::add_scalar(ops::mul_scalar(py, 2.0), cfg.smooth);
    den = ops::add_scalar(ops::add(p2, y2), cfg.smooth);
  } else {
    num = ops::add_scalar(ops::mul_scalar(py, cfg.w1 * cfg.w2), cfg.smooth);
    den = ops::add_scalar(ops::add(ops::mul_scalar(p2, cfg.w1), ops::mul_scalar(y2, cfg.w2)), cfg.smooth);
  }
  Variable mean_term = ops::mean_all(ops::div(num, den));
  return ops::add_scalar(ops::mul_scalar(mean_term, -1.0), 1.0);
}

Variable total_loss(const Variable& pred, const Variable& target, const LossConfig& cfg) {
  return ops::add(ops::mul_scalar(wbce(pred, target, cfg), 0.5), ops::mul_scalar(wdice(pred, target, cfg), 0.5));
}

}  // namespace mptp::losses
