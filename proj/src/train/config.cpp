// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/train/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace mptp::train {
namespace {

using nlohmann::json;

// Wraps one JSON object; get()/take() consume keys so done() can report any
// leftovers. That turns config typos into errors instead of silent defaults.
class Section {
public:
  Section(json obj, std::string name) : obj_(std::move(obj)), name_(std::move(name)) {
    if (!obj_.is_object()) throw std::invalid_argument("config: " + name_ + " must be a JSON object");
  }

  bool has(const char* key) const { return obj_.contains(key); }

  template <typename T>
  T get(const char* key, T fallback) {
    if (!obj_.contains(key)) return fallback;
    T out;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config: bad value type for " + name_ + "." + key);
    }
    obj_.erase(key);
    return out;
  }

  json take(const char* key) {
    json out = obj_.at(key);
    obj_.erase(key);
    return out;
  }

  void done() const {
    if (obj_.empty()) return;
    std::string keys;
    for (const auto& item : obj_.items()) {
      if (!keys.empty()) keys += ", ";
      keys += item.key();
    }
    throw std::invalid_argument("config: unknown key(s) in " + name_ + ": " + keys);
  }

private:
  json obj_;
  std::string name_;
};

template <size_t N>
std::array<int64_t, N> to_array(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != N)
    throw std::invalid_argument("config: " + what + " must be an array of " + std::to_string(N) + " integers");
  std::array<int64_t, N> out{};
  for (size_t i = 0; i < N; ++i) out[i] = j[i].get<int64_t>();
  return out;
}

RunConfig parse(const json& root) {
  RunConfig cfg;
  Section top(root, "top level");
  cfg.seed = top.get<uint64_t>("seed", cfg.seed);
  cfg.freeze_ppe = top.get<bool>("freeze_ppe", cfg.freeze_ppe);

  if (top.has("model")) {
    Section m(top.take("model"), "model");
    ppe::PpeConfig& pc = cfg.model;
    pc.base_channels = m.get<int64_t>("base_channels", pc.base_channels);
    pc.image_h = m.get<int64_t>("image_h", pc.image_h);
    pc.image_w = m.get<int64_t>("image_w", pc.image_w);
    if (m.has("patch_sizes")) pc.patch_sizes = to_array<3>(m.take("patch_sizes"), "model.patch_sizes");
    if (m.has("embed_dims")) pc.embed_dims = to_array<3>(m.take("embed_dims"), "model.embed_dims");
    if (m.has("heads")) pc.heads = to_array<3>(m.take("heads"), "model.heads");
    pc.mlp_ratio = m.get<int64_t>("mlp_ratio", pc.mlp_ratio);
    pc.dropout = m.get<double>("dropout", pc.dropout);
    pc.text_len = m.get<int64_t>("text_len", pc.text_len);
    pc.use_downvit = m.get<bool>("use_downvit", pc.use_downvit);
    pc.use_upvit = m.get<bool>("use_upvit", pc.use_upvit);
    cfg.use_msff = m.get<bool>("use_msff", cfg.use_msff);
    cfg.use_upattention = m.get<bool>("use_upattention", cfg.use_upattention);
    cfg.proj_dim = m.get<int64_t>("proj_dim", cfg.proj_dim);
    m.done();
  }

  if (top.has("embedder")) {
    Section e(top.take("embedder"), "embedder");
    cfg.embedder_kind = e.get<std::string>("kind", cfg.embedder_kind);
    cfg.embedder_assets = e.get<std::string>("assets", cfg.embedder_assets);
    e.done();
  }

  if (top.has("data")) {
    Section d(top.take("data"), "data");
    cfg.train_manifest = d.get<std::string>("train_manifest", cfg.train_manifest);
    cfg.eval_manifest = d.get<std::string>("eval_manifest", cfg.eval_manifest);
    d.done();
  }

  if (top.has("loss")) {
    Section l(top.take("loss"), "loss");
    cfg.loss.w1 = l.get<double>("w1", cfg.loss.w1);
    cfg.loss.w2 = l.get<double>("w2", cfg.loss.w2);
    cfg.loss.smooth = l.get<double>("smooth", cfg.loss.smooth);
    cfg.loss.clamp_eps = l.get<double>("clamp_eps", cfg.loss.clamp_eps);
    cfg.loss.canonical_dice = l.get<bool>("canonical_dice", cfg.loss.canonical_dice);
    l.done();
  }

  if (top.has("optim")) {
    Section o(top.take("optim"), "optim");
    cfg.optim.lr = o.get<double>("lr", cfg.optim.lr);
    cfg.optim.momentum = o.get<double>("momentum", cfg.optim.momentum);
    cfg.optim.cosine_decay = o.get<bool>("cosine_decay", cfg.optim.cosine_decay);
    cfg.optim.batch_size = o.get<int64_t>("batch_size", cfg.optim.batch_size);
    cfg.optim.epochs = o.get<int64_t>("epochs", cfg.optim.epochs);
    cfg.optim.max_steps = o.get<int64_t>("max_steps", cfg.optim.max_steps);
    o.done();
  }

  if (top.has("augment")) {
    Section a(top.take("augment"), "augment");
    cfg.augment.rng_seed = a.get<uint64_t>("rng_seed", cfg.augment.rng_seed);
    if (a.has("ops")) {
      json ops = a.take("ops");
      if (!ops.is_array()) throw std::invalid_argument("config: augment.ops must be an array");
      for (size_t i = 0; i < ops.size(); ++i) {
        Section o(ops[i], "augment.ops[" + std::to_string(i) + "]");
        pretrain::AugmentOp op;
        op.name = o.get<std::string>("name", "");
        op.prob = o.get<double>("prob", op.prob);
        op.magnitude = o.get<double>("magnitude", op.magnitude);
        o.done();
        cfg.augment.ops.push_back(std::move(op));
      }
    }
    a.done();
  }

  if (top.has("output")) {
    Section o(top.take("output"), "output");
    cfg.output_dir = o.get<std::string>("dir", cfg.output_dir);
    cfg.checkpoint_every = o.get<int64_t>("checkpoint_every", cfg.checkpoint_every);
    cfg.plot_loss = o.get<bool>("plot_loss", cfg.plot_loss);
    o.done();
  }

  top.done();
  cfg.validate();
  return cfg;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  pretrain::validate_policy(augment);
  if (proj_dim <= 0 || proj_dim % 4 != 0)
    throw std::invalid_argument("config: model.proj_dim must be positive and divisible by 4");
  if (embedder_kind != "toy" && embedder_kind != "pretrained")
    throw std::invalid_argument("config: embedder.kind must be 'toy' or 'pretrained'");
  if (embedder_kind == "pretrained" && embedder_assets.empty())
    throw std::invalid_argument("config: embedder.kind 'pretrained' needs embedder.assets");
  if (loss.w1 <= 0.0 || loss.w2 <= 0.0) throw std::invalid_argument("config: loss.w1 and loss.w2 must be positive");
  if (loss.smooth < 0.0) throw std::invalid_argument("config: loss.smooth must be >= 0");
  if (loss.clamp_eps <= 0.0 || loss.clamp_eps >= 0.5)
    throw std::invalid_argument("config: loss.clamp_eps must lie in (0, 0.5)");
  if (optim.momentum < 0.0 || optim.momentum >= 1.0)
    throw std::invalid_argument("config: optim.momentum must lie in [0, 1)");
  // Batch statistics need at least two samples while training.
  if (optim.batch_size < 2) throw std::invalid_argument("config: optim.batch_size must be >= 2");
  if (optim.epochs <= 0) throw std::invalid_argument("config: optim.epochs must be positive");
  if (checkpoint_every < 0) throw std::invalid_argument("config: output.checkpoint_every must be >= 0");
  if (output_dir.empty()) throw std::invalid_argument("config: output.dir must not be empty");
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: " + path + " is not valid JSON: " + e.what());
  }
  try {
    return parse(root);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string(e.what()) + " (" + path + ")");
  }
}

std::string config_to_json(const RunConfig& cfg) {
  json ops = json::array();
  for (const auto& op : cfg.augment.ops)
    ops.push_back({{"name", op.name}, {"prob", op.prob}, {"magnitude", op.magnitude}});
  json root = {
      {"seed", cfg.seed},
      {"freeze_ppe", cfg.freeze_ppe},
      {"model",
       {{"base_channels", cfg.model.base_channels},
        {"image_h", cfg.model.image_h},
        {"image_w", cfg.model.image_w},
        {"patch_sizes", cfg.model.patch_sizes},
        {"embed_dims", cfg.model.embed_dims},
        {"heads", cfg.model.heads},
        {"mlp_ratio", cfg.model.mlp_ratio},
        {"dropout", cfg.model.dropout},
        {"text_len", cfg.model.text_len},
        {"use_downvit", cfg.model.use_downvit},
        {"use_upvit", cfg.model.use_upvit},
        {"use_msff", cfg.use_msff},
        {"use_upattention", cfg.use_upattention},
        {"proj_dim", cfg.proj_dim}}},
      {"embedder", {{"kind", cfg.embedder_kind}, {"assets", cfg.embedder_assets}}},
      {"data", {{"train_manifest", cfg.train_manifest}, {"eval_manifest", cfg.eval_manifest}}},
      {"loss",
       {{"w1", cfg.loss.w1},
        {"w2", cfg.loss.w2},
        {"smooth", cfg.loss.smooth},
        {"clamp_eps", cfg.loss.clamp_eps},
        {"canonical_dice", cfg.loss.canonical_dice}}},
      {"optim",
       {{"lr", cfg.optim.lr},
        {"momentum", cfg.optim.momentum},
        {"cosine_decay", cfg.optim.cosine_decay},
        {"batch_size", cfg.optim.batch_size},
        {"epochs", cfg.optim.epochs},
        {"max_steps", cfg.optim.max_steps}}},
      {"augment", {{"rng_seed", cfg.augment.rng_seed}, {"ops", ops}}},
      {"output",
       {{"dir", cfg.output_dir}, {"checkpoint_every", cfg.checkpoint_every}, {"plot_loss", cfg.plot_loss}}},
  };
  return root.dump(2);
}

RunConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: embedded snapshot is not valid JSON: ") + e.what());
  }
  return parse(root);
}

}  // namespace mptp::train
