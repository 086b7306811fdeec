// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "mptp/msff/msff.hpp"
#include "mptp/ppe/ppe.hpp"
#include "mptp/text/text_encoder.hpp"
#include "mptp/train/config.hpp"
#include "mptp/upattention/upattention.hpp"

namespace mptp::train {

// The full segmentation network: caption pyramid, text-conditioned encoder,
// multiscale fusion, attention-gated decoder, sigmoid mask head. Checkpoint
// name spaces: text_encoder.*, ppe.*, msff.*, upattention.*; the first two
// are the subtree a contrastive bundle hands over.
class SegModel : public nn::Module {
public:
  explicit SegModel(const RunConfig& cfg);

  // (B,3,H,W) image in [0,1] + (B,L,768) caption embedding -> (B,1,H,W)
  // foreground probabilities.
  Variable forward(const Variable& img, const Variable& text_embed);

  text::TextEncoder& text_encoder() { return text_encoder_; }
  ppe::Ppe& ppe() { return ppe_; }
  msff::Msff& msff() { return msff_; }
  upatt::UpAttentionCascade& upattention() { return up_; }

private:
  text::TextEncoder text_encoder_;
  ppe::Ppe ppe_;
  msff::Msff msff_;
  upatt::UpAttentionCascade up_;
};

struct RunOptions {
  std::string init_from;      // checkpoint bundle to start from ("" = fresh)
  bool from_scratch = false;  // stage 2 without any bundle, explicit opt-in
};

struct PredictArgs {
  std::string image;
  std::string caption;
  std::string out;   // binary mask image destination
  bool npy = false;  // also drop raw probabilities at out + ".npy"
};

// Stage 1: two augmented views per sample, symmetric stop-gradient loss.
void run_pretrain(const RunConfig& cfg, const RunOptions& opts);
// Stage 2: supervised mask training, inheriting or resuming per opts.
void run_train(const RunConfig& cfg, const RunOptions& opts);
// Per-image metrics CSV plus a macro-average row and summary.txt.
void run_eval(const RunConfig& cfg, const RunOptions& opts);
// One image + caption -> mask image (and optional NPY probability dump).
void run_predict(const RunConfig& cfg, const RunOptions& opts, const PredictArgs& args);

}  // namespace mptp::train
