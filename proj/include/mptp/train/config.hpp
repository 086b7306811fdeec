// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "mptp/losses/losses.hpp"
#include "mptp/ppe/ppe.hpp"
#include "mptp/pretrain/augment.hpp"

namespace mptp::train {

struct OptimConfig {
  double lr = -1.0;  // <= 0: auto-scale 0.05 * batch_size / 256
  double momentum = 0.9;
  bool cosine_decay = true;
  int64_t batch_size = 8;
  int64_t epochs = 1;
  int64_t max_steps = -1;  // optional hard cap, -1 = unlimited

  double base_lr() const { return lr > 0.0 ? lr : 0.05 * static_cast<double>(batch_size) / 256.0; }
};

struct RunConfig {
  uint64_t seed = 42;
  ppe::PpeConfig model;
  int64_t proj_dim = 256;
  std::string embedder_kind = "toy";  // toy | pretrained
  std::string embedder_assets;
  std::string train_manifest;
  std::string eval_manifest;
  losses::LossConfig loss;
  OptimConfig optim;
  pretrain::AugmentationPolicy augment;
  std::string output_dir = "run";
  int64_t checkpoint_every = 0;  // steps; 0 = only at end
  bool freeze_ppe = false;
  bool use_msff = true;
  bool use_upattention = true;
  bool plot_loss = false;

  void validate() const;  // throws with the violated rule
};

// Parse a JSON config file; unknown keys are rejected so typos surface.
RunConfig load_config(const std::string& path);

// Serialized form embedded into checkpoints.
std::string config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const std::string& text);

}  // namespace mptp::train
