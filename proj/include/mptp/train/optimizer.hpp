// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mptp/nn/module.hpp"

namespace mptp::train {

// SGD with classical momentum: v <- m*v + g, p <- p - lr*v. Velocities are
// keyed by parameter name so they survive checkpoint round-trips; frozen
// parameters are skipped entirely (no velocity is ever allocated for them).
class SgdMomentum {
public:
  SgdMomentum(nn::Module& model, double momentum);

  // Applies one update from the currently accumulated grads. Parameters with
  // no grad this step keep their velocity untouched.
  void step(double lr);

  // Name -> velocity tensor, only for parameters that have one. The mutable
  // view is what checkpoint restore writes into.
  std::map<std::string, Tensor> state() const;
  void load_state(const std::map<std::string, Tensor>& state);

private:
  std::vector<std::pair<std::string, Variable*>> params_;
  std::map<std::string, Tensor> velocity_;
  double momentum_;
};

// Half-cosine decay from base_lr at step 0 toward 0 at total_steps.
double cosine_lr(double base_lr, int64_t step, int64_t total_steps);

}  // namespace mptp::train
