// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "mptp/core/variable.hpp"

namespace mptp::nn {

enum class InitKind {
  kHeUniform,  // U(-sqrt(6/fan_in), +sqrt(6/fan_in))
  kZero,
  kOne,
};

enum class BufferInit { kZero, kOne };

// Base class for anything with learnable state. Children are registered by
// pointer (the subclass owns them as members); names join with '.' so the
// parameter list of a whole model is flat and stable. That flat name->tensor
// map is the checkpoint format's spine, so registration order and names are
// load-bearing: do not rename members casually.
class Module {
public:
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;
  virtual ~Module() = default;

  std::vector<std::pair<std::string, Variable*>> named_parameters();
  std::vector<std::pair<std::string, Tensor*>> named_buffers();

  // Deterministic init: each parameter gets its own stream keyed by
  // hash(seed, full_name), so adding a parameter never shifts another's values.
  void initialize(uint64_t seed);

  void set_training(bool on);
  bool training() const { return training_; }

  // Freeze turns off grads for every parameter below this module and makes
  // normalization layers use their running statistics even in training mode.
  void freeze();
  bool frozen() const { return frozen_; }

  void zero_grad();
  int64_t parameter_count();

protected:
  Variable& reg_param(const std::string& name, Shape shape, InitKind kind, int64_t fan_in = 0);
  Tensor& reg_buffer(const std::string& name, Shape shape, BufferInit init);
  void reg_child(const std::string& name, Module* child);

private:
  struct ParamEntry {
    std::string name;
    Variable var;
    InitKind kind;
    int64_t fan_in;
  };
  struct BufferEntry {
    std::string name;
    Tensor tensor;
    BufferInit init;
  };

  void collect_params(const std::string& prefix, std::vector<std::pair<std::string, Variable*>>& out);
  void collect_buffers(const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out);
  void collect_entries(const std::string& prefix, std::vector<std::pair<std::string, ParamEntry*>>& params,
                       std::vector<BufferEntry*>& buffers);

  // deque: stable addresses, reg_* hands out long-lived references
  std::deque<ParamEntry> params_;
  std::deque<BufferEntry> buffers_;
  std::vector<std::pair<std::string, Module*>> children_;
  bool training_ = true;
  bool frozen_ = false;
};

}  // namespace mptp::nn
