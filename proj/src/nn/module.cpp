// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/nn/module.hpp"

#include <cmath>
#include <stdexcept>

#include "mptp/core/rng.hpp"

namespace mptp::nn {

Variable& Module::reg_param(const std::string& name, Shape shape, InitKind kind, int64_t fan_in) {
  if (kind == InitKind::kHeUniform && fan_in <= 0)
    throw std::invalid_argument("parameter '" + name + "' needs a positive fan_in");
  params_.push_back(ParamEntry{name, Variable(Tensor(std::move(shape)), true), kind, fan_in});
  return params_.back().var;
}

Tensor& Module::reg_buffer(const std::string& name, Shape shape, BufferInit init) {
  Tensor t = init == BufferInit::kOne ? Tensor(std::move(shape), 1.0) : Tensor(std::move(shape));
  buffers_.push_back(BufferEntry{name, std::move(t), init});
  return buffers_.back().tensor;
}

void Module::reg_child(const std::string& name, Module* child) {
  children_.emplace_back(name, child);
}

void Module::collect_params(const std::string& prefix, std::vector<std::pair<std::string, Variable*>>& out) {
  for (auto& p : params_) out.emplace_back(prefix + p.name, &p.var);
  for (auto& [name, child] : children_) child->collect_params(prefix + name + ".", out);
}

void Module::collect_buffers(const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out) {
  for (auto& b : buffers_) out.emplace_back(prefix + b.name, &b.tensor);
  for (auto& [name, child] : children_) child->collect_buffers(prefix + name + ".", out);
}

void Module::collect_entries(const std::string& prefix, std::vector<std::pair<std::string, ParamEntry*>>& params,
                             std::vector<BufferEntry*>& buffers) {
  for (auto& p : params_) params.emplace_back(prefix + p.name, &p);
  for (auto& b : buffers_) buffers.push_back(&b);
  for (auto& [name, child] : children_) child->collect_entries(prefix + name + ".", params, buffers);
}

std::vector<std::pair<std::string, Variable*>> Module::named_parameters() {
  std::vector<std::pair<std::string, Variable*>> out;
  collect_params("", out);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> Module::named_buffers() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect_buffers("", out);
  return out;
}

void Module::initialize(uint64_t seed) {
  std::vector<std::pair<std::string, ParamEntry*>> params;
  std::vector<BufferEntry*> buffers;
  collect_entries("", params, buffers);
  for (auto& [full_name, entry] : params) {
    Rng rng(hash_combine(seed, hash_str(full_name)));
    Tensor& t = entry->var.value_mut();
    double* d = t.data();
    const int64_t n = t.numel();
    switch (entry->kind) {
      case InitKind::kHeUniform: {
        const double limit = std::sqrt(6.0 / static_cast<double>(entry->fan_in));
        for (int64_t i = 0; i < n; ++i) d[i] = rng.uniform(-limit, limit);
        break;
      }
      case InitKind::kZero:
        for (int64_t i = 0; i < n; ++i) d[i] = 0.0;
        break;
      case InitKind::kOne:
        for (int64_t i = 0; i < n; ++i) d[i] = 1.0;
        break;
    }
    entry->var.clear_grad();
  }
  for (auto* b : buffers) {
    const double fill = b->init == BufferInit::kOne ? 1.0 : 0.0;
    double* d = b->tensor.data();
    for (int64_t i = 0; i < b->tensor.numel(); ++i) d[i] = fill;
  }
}

void Module::set_training(bool on) {
  training_ = on;
  for (auto& [name, child] : children_) child->set_training(on);
}

void Module::freeze() {
  frozen_ = true;
  for (auto& p : params_) p.var.set_requires_grad(false);
  for (auto& [name, child] : children_) child->freeze();
}

void Module::zero_grad() {
  for (auto& [name, var] : named_parameters()) var->clear_grad();
}

int64_t Module::parameter_count() {
  int64_t n = 0;
  for (auto& [name, var] : named_parameters()) n += var->numel();
  return n;
}

}  // namespace mptp::nn
