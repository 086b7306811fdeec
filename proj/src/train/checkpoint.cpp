// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/train/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace mptp::train {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'M', 'P', 'T', 'P', 'C', 'K', 'P', 'T'};
constexpr uint32_t kFormatVersion = 1;

template <typename T>
void write_le(std::ostream& out, T v) {
  // Raw store; the format is little-endian and so is every supported target.
  static_assert(std::is_integral_v<T>);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json tensors = json::object();
  uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {  // std::map iterates name-sorted
    tensors[name] = {{"offset", offset}, {"shape", t.shape()}};
    offset += static_cast<uint64_t>(t.numel()) * sizeof(double);
  }
  json meta = {
      {"format_version", kFormatVersion},
      {"stage", ckpt.stage},
      {"step", ckpt.step},
      {"config", ckpt.config_json},
      {"rng", {{"seed", ckpt.rng_seed}, {"counter", ckpt.rng_counter}}},
      {"tensors", tensors},
  };
  const std::string meta_text = meta.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_le<uint32_t>(out, kFormatVersion);
  write_le<uint64_t>(out, meta_text.size());
  out.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
  for (const auto& [name, t] : ckpt.tensors)
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint: short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: " + path + " is not a checkpoint bundle");
  const uint32_t version = read_le<uint32_t>(in);
  if (version != kFormatVersion)
    throw std::runtime_error("checkpoint: " + path + " has unsupported format version " + std::to_string(version));
  const uint64_t meta_len = read_le<uint64_t>(in);
  std::string meta_text(meta_len, '\0');
  in.read(meta_text.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw std::runtime_error("checkpoint: truncated metadata in " + path);

  json meta;
  try {
    meta = json::parse(meta_text);
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: bad metadata in " + path + ": " + e.what());
  }

  Checkpoint ckpt;
  ckpt.stage = meta.at("stage").get<int64_t>();
  ckpt.step = meta.at("step").get<int64_t>();
  ckpt.config_json = meta.at("config").get<std::string>();
  ckpt.rng_seed = meta.at("rng").at("seed").get<uint64_t>();
  ckpt.rng_counter = meta.at("rng").at("counter").get<uint64_t>();

  const std::streampos payload_start = in.tellg();
  for (const auto& item : meta.at("tensors").items()) {
    const uint64_t offset = item.value().at("offset").get<uint64_t>();
    const Shape shape = item.value().at("shape").get<Shape>();
    Tensor t = Tensor::zeros(shape);
    in.seekg(payload_start + static_cast<std::streamoff>(offset));
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated payload for " + item.key() + " in " + path);
    ckpt.tensors.emplace(item.key(), std::move(t));
  }
  return ckpt;
}

void collect_module(nn::Module& model, std::map<std::string, Tensor>& out) {
  for (auto& [name, p] : model.named_parameters()) out[name] = p->value();
  for (auto& [name, b] : model.named_buffers()) out[name] = *b;
}

void apply_to_module(nn::Module& model, const std::map<std::string, Tensor>& tensors) {
  std::map<std::string, Tensor> pending = tensors;
  std::string missing;
  auto restore = [&](const std::string& name, Tensor& dst) {
    auto it = pending.find(name);
    if (it == pending.end()) {
      missing += missing.empty() ? name : ", " + name;
      return;
    }
    if (it->second.shape() != dst.shape())
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    dst = it->second;
    pending.erase(it);
  };
  for (auto& [name, p] : model.named_parameters()) restore(name, p->value_mut());
  for (auto& [name, b] : model.named_buffers()) restore(name, *b);

  std::string unexpected;
  for (const auto& [name, t] : pending) unexpected += unexpected.empty() ? name : ", " + name;
  if (!missing.empty() || !unexpected.empty()) {
    std::string msg = "checkpoint: model/bundle tensor mismatch.";
    if (!missing.empty()) msg += " Missing from bundle: " + missing + ".";
    if (!unexpected.empty()) msg += " Not in model: " + unexpected + ".";
    throw std::runtime_error(msg);
  }
}

InheritReport inherit_encoder(nn::Module& model, const std::map<std::string, Tensor>& stage1_tensors) {
  InheritReport report;
  auto is_encoder = [](const std::string& name) {
    return name.rfind("ppe.", 0) == 0 || name.rfind("text_encoder.", 0) == 0;
  };
  auto restore = [&](const std::string& name, Tensor& dst) {
    if (!is_encoder(name)) {
      report.initialized.push_back(name);
      return;
    }
    auto it = stage1_tensors.find(name);
    if (it == stage1_tensors.end())
      throw std::runtime_error("checkpoint: stage-1 bundle lacks encoder tensor " + name);
    if (it->second.shape() != dst.shape())
      throw std::runtime_error("checkpoint: shape mismatch for inherited tensor " + name);
    dst = it->second;
    report.restored.push_back(name);
  };
  for (auto& [name, p] : model.named_parameters()) restore(name, p->value_mut());
  for (auto& [name, b] : model.named_buffers()) restore(name, *b);
  return report;
}

}  // namespace mptp::train
