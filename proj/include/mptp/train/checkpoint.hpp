// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mptp/nn/module.hpp"

namespace mptp::train {

// On-disk bundle: 8-byte magic "MPTPCKPT", u32 format version, u64 metadata
// length, JSON metadata, then the tensor payload as raw little-endian f64 in
// sorted-name order. Rebuilding the metadata from the parsed fields is
// deterministic, so load followed by save is byte-identical.
struct Checkpoint {
  int64_t stage = 2;  // 1 = contrastive pretraining, 2 = segmentation
  int64_t step = 0;
  std::string config_json;
  uint64_t rng_seed = 0;     // dropout stream state at save time
  uint64_t rng_counter = 0;
  std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Copies every parameter and buffer of the module into the map under its
// qualified name. Optimizer velocities go in under "optim.momentum.<name>".
void collect_module(nn::Module& model, std::map<std::string, Tensor>& out);

// Strict scatter: the map must cover the module's parameters and buffers
// exactly (after the caller strips any "optim." entries); missing and
// unexpected names are both listed in the error.
void apply_to_module(nn::Module& model, const std::map<std::string, Tensor>& tensors);

// Stage-1 -> stage-2 handoff: restore exactly the encoder subtree, i.e. every
// model tensor named ppe.* or text_encoder.*. All of those must be present in
// the stage-1 map with matching shapes; everything else keeps its fresh
// initialization and is reported as such.
struct InheritReport {
  std::vector<std::string> restored;
  std::vector<std::string> initialized;
};
InheritReport inherit_encoder(nn::Module& model, const std::map<std::string, Tensor>& stage1_tensors);

}  // namespace mptp::train
