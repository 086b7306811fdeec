// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mptp/core/tensor.hpp"

namespace mptp::text {

// Trim whitespace, reject empty captions, cap length at 64 characters
// (longer captions are truncated with a stderr note).
std::string prepare_caption(const std::string& raw);

// Lowercase and split on non-alphanumeric runs.
std::vector<std::string> tokenize(const std::string& caption);

// Frozen caption embedder: maps a caption to (1, text_len, dim). Embedders
// hold no trainable parameters and are never touched by optimizers.
class Embedder {
public:
  virtual ~Embedder() = default;
  virtual Tensor embed(const std::string& caption, int64_t text_len) const = 0;
  virtual int64_t dim() const = 0;
};

// Deterministic hash-based embedder for tests and toy runs: each token's
// vector is drawn from an RNG keyed by the token text, so no assets are
// needed and identical captions embed bitwise identically.
class ToyEmbedder : public Embedder {
public:
  Tensor embed(const std::string& caption, int64_t text_len) const override;
  int64_t dim() const override { return 768; }
};

// Table-lookup embedder backed by external assets in one directory:
//   meta.json        {"dim": E, "vocab_size": V}
//   vocab.txt        one token per line (must include [PAD] and [UNK])
//   embeddings.f64   V*E little-endian doubles, row per vocab entry
// Words missing from the vocabulary fall back to greedy longest-prefix
// subword matching, then [UNK].
class PretrainedEmbedder : public Embedder {
public:
  explicit PretrainedEmbedder(const std::string& asset_dir);
  Tensor embed(const std::string& caption, int64_t text_len) const override;
  int64_t dim() const override { return dim_; }

private:
  std::vector<int64_t> lookup(const std::string& word) const;
  std::unordered_map<std::string, int64_t> vocab_;
  std::vector<double> table_;  // (V, E) row-major
  int64_t dim_ = 0;
  int64_t pad_id_ = -1, unk_id_ = -1;
  size_t max_token_len_ = 0;
};

// kind: "toy" | "pretrained"
std::unique_ptr<Embedder> make_embedder(const std::string& kind, const std::string& asset_dir);

}  // namespace mptp::text
