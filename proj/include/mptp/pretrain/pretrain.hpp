// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "mptp/nn/layers.hpp"
#include "mptp/ppe/ppe.hpp"
#include "mptp/text/text_encoder.hpp"

namespace mptp::pretrain {

// Pool-and-project head: GAP each pyramid level, concatenate (C+2C+4C = 7C),
// then fc(bias off) -> BN -> ReLU -> fc to width Z.
class Projector : public nn::Module {
public:
  Projector(int64_t base_ch, int64_t z);
  Variable forward(const std::array<Variable, 3>& pyramid);

private:
  nn::Linear fc1_;
  nn::BatchNorm bn_;
  nn::Linear fc2_;
};

// Bottleneck head on projections: fc(bias off) Z -> Z/4 -> BN -> ReLU -> fc
// back to Z.
class Predictor : public nn::Module {
public:
  explicit Predictor(int64_t z);
  Variable forward(const Variable& y);

private:
  nn::Linear fc1_;
  nn::BatchNorm bn_;
  nn::Linear fc2_;
};

// -mean_b cos(p_b, z_b) with z detached inside (the stop-gradient branch) and
// an 1e-8 norm guard. Range [-1, 1].
Variable neg_cosine(const Variable& p, const Variable& z);

// The stage-1 tower: caption encoder + image encoder + projection/prediction
// heads. Checkpoint name spaces: text_encoder.*, ppe.*, projector.*,
// predictor.*; the first two are what stage 2 inherits.
class PretrainModel : public nn::Module {
public:
  PretrainModel(const ppe::PpeConfig& cfg, int64_t proj_dim);

  // One view through encoder + projector (Y) and predictor (P).
  struct ViewOut {
    Variable y;
    Variable p;
  };
  ViewOut forward_view(const Variable& img, const Variable& text_embed);

  // L = D(P1, sg(Y2)) + D(P2, sg(Y1)); range [-2, 2].
  Variable symmetric_loss(const ViewOut& v1, const ViewOut& v2);

  text::TextEncoder& text_encoder() { return text_encoder_; }
  ppe::Ppe& ppe() { return ppe_; }

private:
  text::TextEncoder text_encoder_;
  ppe::Ppe ppe_;
  Projector projector_;
  Predictor predictor_;
};

}  // namespace mptp::pretrain
