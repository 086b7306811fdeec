// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/pretrain/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mptp/core/rng.hpp"

namespace mptp::pretrain {

namespace {

const char* kWhitelist[] = {"brightness-jitter", "contrast-jitter", "gaussian-noise", "gaussian-blur",
                            "grayscale-mix"};

void clamp01(Tensor& t) {
  double* d = t.data();
  for (int64_t i = 0; i < t.numel(); ++i) d[i] = std::min(1.0, std::max(0.0, d[i]));
}

void blur_separable(Tensor& t, double sigma) {
  const int64_t C = t.dim(1), H = t.dim(2), W = t.dim(3);
  double k[5];
  double total = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double d = static_cast<double>(i - 2);
    k[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    total += k[i];
  }
  for (double& v : k) v /= total;
  Tensor tmp(t.shape());
  auto at = [&](const Tensor& src, int64_t c, int64_t h, int64_t w) {
    h = std::clamp<int64_t>(h, 0, H - 1);
    w = std::clamp<int64_t>(w, 0, W - 1);
    return src.data()[(c * H + h) * W + w];
  };
  for (int64_t c = 0; c < C; ++c)
    for (int64_t h = 0; h < H; ++h)
      for (int64_t w = 0; w < W; ++w) {
        double s = 0.0;
        for (int i = 0; i < 5; ++i) s += k[i] * at(t, c, h, w + i - 2);
        tmp.data()[(c * H + h) * W + w] = s;
      }
  for (int64_t c = 0; c < C; ++c)
    for (int64_t h = 0; h < H; ++h)
      for (int64_t w = 0; w < W; ++w) {
        double s = 0.0;
        for (int i = 0; i < 5; ++i) s += k[i] * at(tmp, c, h + i - 2, w);
        t.data()[(c * H + h) * W + w] = s;
      }
}

}  // namespace

void validate_policy(const AugmentationPolicy& policy) {
  for (const auto& op : policy.ops) {
    if (op.name.find("flip") != std::string::npos || op.name.find("crop") != std::string::npos)
      throw std::invalid_argument("augmentation op '" + op.name +
                                  "' is rejected: geometric ops would invalidate positional captions");
    bool known = false;
    for (const char* w : kWhitelist) known = known || op.name == w;
    if (!known) throw std::invalid_argument("unknown augmentation op '" + op.name + "'");
    if (op.prob < 0.0 || op.prob > 1.0)
      throw std::invalid_argument("augmentation op '" + op.name + "' has probability outside [0,1]");
    if (op.magnitude < 0.0)
      throw std::invalid_argument("augmentation op '" + op.name + "' has negative magnitude");
  }
}

Tensor augment_view(const Tensor& img, const AugmentationPolicy& policy, int64_t epoch, int64_t sample_index,
                    int64_t view) {
  if (img.rank() != 4) throw std::invalid_argument("augment expects (1,3,H,W), got " + img.shape_str());
  validate_policy(policy);
  Rng rng(hash_combine(hash_combine(hash_combine(policy.rng_seed, static_cast<uint64_t>(epoch)),
                                    static_cast<uint64_t>(sample_index)),
                       static_cast<uint64_t>(view)));
  Tensor out = img;
  const int64_t n = out.numel();
  for (const auto& op : policy.ops) {
    if (rng.uniform() >= op.prob) continue;
    if (op.name == "brightness-jitter") {
      const double delta = rng.uniform(-op.magnitude, op.magnitude);
      for (int64_t i = 0; i < n; ++i) out[i] += delta;
    } else if (op.name == "contrast-jitter") {
      const double delta = rng.uniform(-op.magnitude, op.magnitude);
      double mean = 0.0;
      for (int64_t i = 0; i < n; ++i) mean += out[i];
      mean /= static_cast<double>(n);
      for (int64_t i = 0; i < n; ++i) out[i] = (out[i] - mean) * (1.0 + delta) + mean;
    } else if (op.name == "gaussian-noise") {
      for (int64_t i = 0; i < n; ++i) out[i] += op.magnitude * rng.normal();
    } else if (op.name == "gaussian-blur") {
      blur_separable(out, rng.uniform(0.1, std::max(0.1, op.magnitude)));
    } else if (op.name == "grayscale-mix") {
      const double alpha = rng.uniform(0.0, op.magnitude);
      const int64_t C = out.dim(1), S = out.dim(2) * out.dim(3);
      for (int64_t b = 0; b < out.dim(0); ++b)
        for (int64_t i = 0; i < S; ++i) {
          double gray = 0.0;
          for (int64_t c = 0; c < C; ++c) gray += out[(b * C + c) * S + i];
          gray /= static_cast<double>(C);
          for (int64_t c = 0; c < C; ++c) {
            double& v = out[(b * C + c) * S + i];
            v = (1.0 - alpha) * v + alpha * gray;
          }
        }
    }
    clamp01(out);
  }
  return out;
}

std::pair<Tensor, Tensor> augment_pair(const Tensor& img, const AugmentationPolicy& policy, int64_t epoch,
                                       int64_t sample_index) {
  return {augment_view(img, policy, epoch, sample_index, 1), augment_view(img, policy, epoch, sample_index, 2)};
}

}  // namespace mptp::pretrain
