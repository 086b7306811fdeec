// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mptp/core/tensor.hpp"

namespace mptp {

class Variable;

// Reverse-mode tape node. backward(grad_out) scatters into the parents' grads;
// the engine guarantees it runs only after every child has contributed.
struct VarNode {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<VarNode>> parents;
  std::function<void(const Tensor&)> backward;
  uint64_t seq = 0;
};

// Gradient recording switch, thread-local.
struct GradMode {
  static bool enabled();
  static void set(bool on);
};

struct NoGradGuard {
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
  ~NoGradGuard() { GradMode::set(prev_); }

private:
  bool prev_;
};

class Variable {
public:
  Variable() = default;
  explicit Variable(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& value_mut() { return node_->value; }  // leaves only (optimizer updates)
  const Shape& shape() const { return node_->value.shape(); }
  int64_t numel() const { return node_->value.numel(); }
  int64_t dim(int64_t i) const { return node_->value.dim(i); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  bool has_grad() const { return node_->grad.defined(); }
  const Tensor& grad() const { return node_->grad; }
  void clear_grad() { node_->grad = Tensor(); }
  void accumulate_grad(const Tensor& g);

  // Shares nothing with the graph: fresh leaf carrying a copy of the value.
  Variable detach() const { return Variable(node_->value, false); }

  // Builds a graph node when grad mode is on and some parent requires grad;
  // otherwise returns a plain leaf and drops the closure immediately.
  static Variable make_op(Tensor value, std::vector<Variable> parents, std::function<void(const Tensor&)> fn);

  std::shared_ptr<VarNode> node() const { return node_; }

private:
  std::shared_ptr<VarNode> node_;
};

// Runs reverse-mode accumulation from a scalar root, then releases the graph
// edges so activation memory frees as soon as possible. Leaf grads survive.
void backward(const Variable& root);

}  // namespace mptp
