// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mptp/core/tensor.hpp"

namespace mptp::data {

struct ManifestRow {
  std::string image_path;  // absolute after resolution
  std::string caption;
  std::string mask_path;  // empty when absent
};

struct Manifest {
  std::vector<ManifestRow> rows;
  std::string source_path;
};

// Comma-delimited UTF-8 with header `image_path,caption,mask_path` and
// RFC4180-style quoting. Relative paths resolve against the manifest's
// directory. With require_mask, every row must carry a mask path.
Manifest load_manifest(const std::string& path, bool require_mask);

struct Sample {
  Tensor image;  // (1,3,H,W) in [0,1]
  std::string caption;
  Tensor mask;  // (1,1,H,W) binary, undefined when absent
  bool has_mask = false;
};

Sample load_sample(const ManifestRow& row, int64_t out_h, int64_t out_w);

// Deterministic shuffled batching: order is a pure function of (seed, epoch).
// Training drops a trailing partial batch (BN needs >= 2 samples); eval keeps it.
std::vector<std::vector<size_t>> batch_indices(size_t n_rows, size_t batch_size, uint64_t seed, int64_t epoch,
                                               bool drop_last);

}  // namespace mptp::data
