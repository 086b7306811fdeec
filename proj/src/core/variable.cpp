// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/core/variable.hpp"

#include <atomic>
#include <stdexcept>
#include <unordered_set>

namespace mptp {

namespace {
thread_local bool g_grad_enabled = true;
std::atomic<uint64_t> g_seq{1};
}  // namespace

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set(bool on) { g_grad_enabled = on; }

Variable::Variable(Tensor value, bool requires_grad) : node_(std::make_shared<VarNode>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
}

void Variable::accumulate_grad(const Tensor& g) {
  if (!node_->grad.defined()) {
    node_->grad = g;
    return;
  }
  check_same_shape(node_->grad, g, "grad accumulate");
  double* dst = node_->grad.data();
  const double* src = g.data();
  const int64_t n = g.numel();
#pragma omp parallel for simd schedule(static)
  for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

Variable Variable::make_op(Tensor value, std::vector<Variable> parents, std::function<void(const Tensor&)> fn) {
  bool track = GradMode::enabled();
  if (track) {
    bool any = false;
    for (const auto& p : parents)
      if (p.node()->requires_grad) {
        any = true;
        break;
      }
    track = any;
  }
  Variable out(std::move(value), track);
  if (track) {
    auto& node = *out.node_;
    node.parents.reserve(parents.size());
    for (auto& p : parents) node.parents.push_back(p.node());
    node.backward = std::move(fn);
  }
  return out;
}

void backward(const Variable& root) {
  if (!root.defined()) throw std::invalid_argument("backward on undefined variable");
  if (root.numel() != 1) throw std::invalid_argument("backward requires a scalar root, got " + root.value().shape_str());
  if (!root.requires_grad()) throw std::invalid_argument("backward on a graph that tracks no gradients");

  // Iterative post-order topological sort over parents. The order vector owns
  // the nodes so releasing graph edges mid-walk cannot free a pending node.
  std::vector<std::shared_ptr<VarNode>> order;
  std::unordered_set<VarNode*> seen;
  std::vector<std::pair<std::shared_ptr<VarNode>, size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      std::shared_ptr<VarNode> p = node->parents[idx++];
      if (p->requires_grad && !seen.count(p.get())) {
        seen.insert(p.get());
        stack.emplace_back(std::move(p), 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad = Tensor(root.shape(), 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    VarNode* node = it->get();
    if (node->backward && node->grad.defined()) node->backward(node->grad);
    const bool leaf = node->parents.empty();
    if (!leaf) {
      node->grad = Tensor();  // intermediate grads are never read again
      node->backward = nullptr;
      node->parents.clear();
    }
  }
}

}  // namespace mptp
