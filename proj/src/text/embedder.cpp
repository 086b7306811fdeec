// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/text/embedder.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mptp/core/rng.hpp"
#include "nlohmann/json.hpp"

namespace mptp::text {

std::string prepare_caption(const std::string& raw) {
  size_t a = 0, b = raw.size();
  while (a < b && std::isspace(static_cast<unsigned char>(raw[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(raw[b - 1]))) --b;
  std::string s = raw.substr(a, b - a);
  if (s.empty()) throw std::invalid_argument("caption is empty after trimming");
  if (s.size() > 64) {
    std::fprintf(stderr, "[text] caption truncated to 64 characters: \"%s\"\n", s.c_str());
    s.resize(64);
  }
  return s;
}

std::vector<std::string> tokenize(const std::string& caption) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : caption) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

namespace {

// One embedding row drawn from a stream keyed by the token text.
void fill_token_row(const std::string& token, double* row, int64_t dim) {
  Rng rng(hash_str(token));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int64_t i = 0; i < dim; ++i) row[i] = rng.normal() * scale;
}

std::vector<std::string> tokens_for(const std::string& caption, int64_t text_len) {
  std::vector<std::string> tokens = tokenize(prepare_caption(caption));
  if (static_cast<int64_t>(tokens.size()) > text_len) {
    std::fprintf(stderr, "[text] caption truncated from %zu to %lld tokens\n", tokens.size(),
                 static_cast<long long>(text_len));
    tokens.resize(static_cast<size_t>(text_len));
  }
  return tokens;
}

}  // namespace

Tensor ToyEmbedder::embed(const std::string& caption, int64_t text_len) const {
  std::vector<std::string> tokens = tokens_for(caption, text_len);
  Tensor out(Shape{1, text_len, dim()});
  for (int64_t t = 0; t < text_len; ++t) {
    const std::string& tok = t < static_cast<int64_t>(tokens.size()) ? tokens[static_cast<size_t>(t)] : "[PAD]";
    fill_token_row(tok, out.data() + t * dim(), dim());
  }
  return out;
}

PretrainedEmbedder::PretrainedEmbedder(const std::string& asset_dir) {
  const std::string meta_path = asset_dir + "/meta.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw std::runtime_error("embedder assets missing: cannot open " + meta_path);
  nlohmann::json meta = nlohmann::json::parse(meta_in);
  dim_ = meta.at("dim").get<int64_t>();
  const int64_t vocab_size = meta.at("vocab_size").get<int64_t>();
  if (dim_ <= 0 || vocab_size <= 0) throw std::runtime_error("embedder meta has non-positive dim/vocab_size");

  const std::string vocab_path = asset_dir + "/vocab.txt";
  std::ifstream vocab_in(vocab_path);
  if (!vocab_in) throw std::runtime_error("embedder assets missing: cannot open " + vocab_path);
  std::string line;
  int64_t id = 0;
  while (std::getline(vocab_in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    vocab_.emplace(line, id);
    max_token_len_ = std::max(max_token_len_, line.size());
    ++id;
  }
  if (id != vocab_size)
    throw std::runtime_error("embedder vocab.txt has " + std::to_string(id) + " entries, meta says " +
                             std::to_string(vocab_size));
  auto pad_it = vocab_.find("[PAD]");
  auto unk_it = vocab_.find("[UNK]");
  if (pad_it == vocab_.end() || unk_it == vocab_.end())
    throw std::runtime_error("embedder vocab must contain [PAD] and [UNK]");
  pad_id_ = pad_it->second;
  unk_id_ = unk_it->second;

  const std::string table_path = asset_dir + "/embeddings.f64";
  std::ifstream table_in(table_path, std::ios::binary);
  if (!table_in) throw std::runtime_error("embedder assets missing: cannot open " + table_path);
  table_.resize(static_cast<size_t>(vocab_size * dim_));
  table_in.read(reinterpret_cast<char*>(table_.data()),
                static_cast<std::streamsize>(table_.size() * sizeof(double)));
  if (table_in.gcount() != static_cast<std::streamsize>(table_.size() * sizeof(double)))
    throw std::runtime_error("embedder table " + table_path + " is shorter than vocab_size*dim doubles");
}

std::vector<int64_t> PretrainedEmbedder::lookup(const std::string& word) const {
  auto it = vocab_.find(word);
  if (it != vocab_.end()) return {it->second};
  // Greedy longest-prefix segmentation; unknown leading char falls to [UNK].
  std::vector<int64_t> ids;
  size_t pos = 0;
  while (pos < word.size()) {
    size_t take = std::min(max_token_len_, word.size() - pos);
    bool matched = false;
    for (; take >= 1; --take) {
      auto sub = vocab_.find(word.substr(pos, take));
      if (sub != vocab_.end()) {
        ids.push_back(sub->second);
        pos += take;
        matched = true;
        break;
      }
    }
    if (!matched) {
      ids.push_back(unk_id_);
      ++pos;
    }
  }
  return ids;
}

Tensor PretrainedEmbedder::embed(const std::string& caption, int64_t text_len) const {
  std::vector<std::string> words = tokenize(prepare_caption(caption));
  std::vector<int64_t> ids;
  for (const auto& w : words) {
    std::vector<int64_t> part = lookup(w);
    ids.insert(ids.end(), part.begin(), part.end());
  }
  if (static_cast<int64_t>(ids.size()) > text_len) {
    std::fprintf(stderr, "[text] caption truncated from %zu to %lld tokens\n", ids.size(),
                 static_cast<long long>(text_len));
    ids.resize(static_cast<size_t>(text_len));
  }
  Tensor out(Shape{1, text_len, dim_});
  for (int64_t t = 0; t < text_len; ++t) {
    const int64_t tok = t < static_cast<int64_t>(ids.size()) ? ids[static_cast<size_t>(t)] : pad_id_;
    const double* src = table_.data() + tok * dim_;
    double* dst = out.data() + t * dim_;
    for (int64_t i = 0; i < dim_; ++i) dst[i] = src[i];
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(const std::string& kind, const std::string& asset_dir) {
  if (kind == "toy") return std::make_unique<ToyEmbedder>();
  if (kind == "pretrained") return std::make_unique<PretrainedEmbedder>(asset_dir);
  throw std::invalid_argument("unknown embedder kind '" + kind + "' (expected toy|pretrained)");
}

}  // namespace mptp::text
