// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/pretrain/pretrain.hpp"

#include <stdexcept>

namespace mptp::pretrain {

Projector::Projector(int64_t base_ch, int64_t z)
    : fc1_(7 * base_ch, z, /*bias=*/false), bn_(z), fc2_(z, z, /*bias=*/true) {
  reg_child("fc1", &fc1_);
  reg_child("bn", &bn_);
  reg_child("fc2", &fc2_);
}

Variable Projector::forward(const std::array<Variable, 3>& pyramid) {
  Variable pooled = ops::concat(
      {ops::global_avg_pool(pyramid[0]), ops::global_avg_pool(pyramid[1]), ops::global_avg_pool(pyramid[2])}, 1);
  return fc2_.forward(ops::relu(bn_.forward(fc1_.forward(pooled))));
}

Predictor::Predictor(int64_t z) : fc1_(z, z / 4, /*bias=*/false), bn_(z / 4), fc2_(z / 4, z, /*bias=*/true) {
  if (z % 4 != 0) throw std::invalid_argument("projection width must be divisible by 4, got " + std::to_string(z));
  reg_child("fc1", &fc1_);
  reg_child("bn", &bn_);
  reg_child("fc2", &fc2_);
}

Variable Predictor::forward(const Variable& y) { return fc2_.forward(ops::relu(bn_.forward(fc1_.forward(y)))); }

Variable neg_cosine(const Variable& p, const Variable& z) {
  check_same_shape(p.value(), z.value(), "neg_cosine inputs");
  Variable zd = z.detach();
  Variable dot = ops::sum_per_sample(ops::mul(p, zd));
  // The 1e-6 sits inside the sqrt: d/dx sqrt(x) is unbounded at 0, so an
  // exactly-zero row (a fully dead bottleneck) would blow up the backward
  // pass even though the guarded forward division stays finite.
  Variable np = ops::sqrt(ops::add_scalar(ops::sum_per_sample(ops::mul(p, p)), 1e-6));
  Variable nz = ops::sqrt(ops::add_scalar(ops::sum_per_sample(ops::mul(zd, zd)), 1e-6));
  Variable cos = ops::div(dot, ops::add_scalar(ops::mul(np, nz), 1e-8));
  return ops::mul_scalar(ops::mean_all(cos), -1.0);
}

PretrainModel::PretrainModel(const ppe::PpeConfig& cfg, int64_t proj_dim)
    : text_encoder_(768, cfg.embed_dims[0]), ppe_(cfg), projector_(cfg.base_channels, proj_dim),
      predictor_(proj_dim) {
  reg_child("text_encoder", &text_encoder_);
  reg_child("ppe", &ppe_);
  reg_child("projector", &projector_);
  reg_child("predictor", &predictor_);
}

PretrainModel::ViewOut PretrainModel::forward_view(const Variable& img, const Variable& text_embed) {
  Variable text1 = text_encoder_.forward(text_embed)[0];
  std::array<Variable, 3> pyr = ppe_.forward(img, text1);
  ViewOut out;
  out.y = projector_.forward(pyr);
  out.p = predictor_.forward(out.y);
  return out;
}

Variable PretrainModel::symmetric_loss(const ViewOut& v1, const ViewOut& v2) {
  return ops::add(neg_cosine(v1.p, v2.y), neg_cosine(v2.p, v1.y));
}

}  // namespace mptp::pretrain
