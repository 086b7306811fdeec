// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/train/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace mptp::train {

SgdMomentum::SgdMomentum(nn::Module& model, double momentum) : momentum_(momentum) {
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("sgd: momentum must lie in [0, 1)");
  params_ = model.named_parameters();
}

void SgdMomentum::step(double lr) {
  for (auto& [name, p] : params_) {
    if (!p->requires_grad() || !p->has_grad()) continue;
    const Tensor& g = p->grad();
    auto it = velocity_.find(name);
    if (it == velocity_.end()) it = velocity_.emplace(name, Tensor::zeros(g.shape())).first;
    Tensor& v = it->second;
    double* vd = v.data();
    double* pd = p->value_mut().data();
    const double* gd = g.data();
    const int64_t n = g.numel();
    const double m = momentum_;
#pragma omp parallel for simd
    for (int64_t i = 0; i < n; ++i) {
      vd[i] = m * vd[i] + gd[i];
      pd[i] -= lr * vd[i];
    }
  }
}

std::map<std::string, Tensor> SgdMomentum::state() const { return velocity_; }

void SgdMomentum::load_state(const std::map<std::string, Tensor>& state) {
  velocity_.clear();
  for (const auto& [name, t] : state) {
    bool known = false;
    for (const auto& [pname, p] : params_) {
      if (pname != name) continue;
      if (p->shape() != t.shape()) throw std::runtime_error("sgd: velocity shape mismatch for " + name);
      known = true;
      break;
    }
    if (!known) throw std::runtime_error("sgd: velocity for unknown parameter " + name);
    velocity_.emplace(name, t);
  }
}

double cosine_lr(double base_lr, int64_t step, int64_t total_steps) {
  if (total_steps <= 0) return base_lr;
  if (step >= total_steps) return 0.0;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(t * 3.14159265358979323846));
}

}  // namespace mptp::train
