// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
//
// Loss analytics against closed-form values plus an independent plain-loop
// oracle, then derivative checks for the composite objective.
#include <doctest.h>

#include <cmath>

#include "mptp/losses/losses.hpp"
#include "testutil.hpp"

using namespace mptp;
using testutil::rand_binary;
using testutil::randt;

namespace {

const losses::LossConfig kDefault;

// Plain-loop mirror of the weighted BCE reduction.
double oracle_wbce(const Tensor& p, const Tensor& y, const losses::LossConfig& cfg) {
  const int64_t B = p.dim(0), per = p.numel() / B;
  double total = 0;
  for (int64_t b = 0; b < B; ++b) {
    double pos_sum = 0, neg_sum = 0, pos_n = 0, neg_n = 0;
    for (int64_t i = 0; i < per; ++i) {
      const double pi = std::min(std::max(p[b * per + i], cfg.clamp_eps), 1.0 - cfg.clamp_eps);
      const double yi = y[b * per + i];
      const double bce = -(yi * std::log(pi) + (1.0 - yi) * std::log(1.0 - pi));
      if (yi > 0.5) {
        pos_sum += bce;
        pos_n += 1;
      } else {
        neg_sum += bce;
        neg_n += 1;
      }
    }
    total += cfg.w1 * (pos_n > 0 ? pos_sum / pos_n : 0.0) + cfg.w2 * (neg_n > 0 ? neg_sum / neg_n : 0.0);
  }
  return total / static_cast<double>(B);
}

// Plain-loop mirror of the weighted dice reduction, both forms.
double oracle_wdice(const Tensor& p, const Tensor& y, const losses::LossConfig& cfg) {
  const int64_t B = p.dim(0), per = p.numel() / B;
  double total = 0;
  for (int64_t b = 0; b < B; ++b) {
    double py = 0, p2 = 0, y2 = 0;
    for (int64_t i = 0; i < per; ++i) {
      py += p[b * per + i] * y[b * per + i];
      p2 += p[b * per + i] * p[b * per + i];
      y2 += y[b * per + i] * y[b * per + i];
    }
    const double num = cfg.canonical_dice ? 2.0 * py + cfg.smooth : cfg.w1 * cfg.w2 * py + cfg.smooth;
    const double den = cfg.canonical_dice ? p2 + y2 + cfg.smooth : cfg.w1 * p2 + cfg.w2 * y2 + cfg.smooth;
    total += num / den;
  }
  return 1.0 - total / static_cast<double>(B);
}

}  // namespace

TEST_CASE("uninformative predictions cost exactly ln 2") {
  const Tensor p = Tensor::full({2, 1, 4, 4}, 0.5);
  Tensor y = Tensor::zeros({2, 1, 4, 4});
  for (int64_t b = 0; b < 2; ++b)  // both classes present in each sample
    for (int64_t i = 0; i < 8; ++i) y[b * 16 + i * 2] = 1.0;
  const double v = losses::wbce(Variable(p, false), Variable(y, false), kDefault).value().item();
  CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("the per-pixel map clamps instead of emitting infinities") {
  const Tensor p = Tensor::zeros({1, 1, 1, 2});  // exact 0 against target 1
  Tensor y = Tensor::zeros({1, 1, 1, 2});
  y[0] = 1.0;
  const Variable m = losses::bce_map(Variable(p, false), Variable(y, false), kDefault);
  CHECK(m.value()[0] == doctest::Approx(-std::log(kDefault.clamp_eps)));
  CHECK(m.value()[1] == doctest::Approx(-std::log(1.0 - kDefault.clamp_eps)));
  CHECK(m.value().all_finite());
}

TEST_CASE("weighted dice bottoms out at 0.75 on a perfect binary match") {
  const Tensor y = rand_binary({2, 1, 4, 4}, 3);
  const double v = losses::wdice(Variable(y, false), Variable(y, false), kDefault).value().item();
  CHECK(v == doctest::Approx(0.75).epsilon(1e-9));

  losses::LossConfig canon = kDefault;
  canon.canonical_dice = true;
  const double c = losses::wdice(Variable(y, false), Variable(y, false), canon).value().item();
  CHECK(c == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("total objective at a perfect match is 0.375") {
  Tensor y = rand_binary({2, 1, 8, 8}, 5);
  y[0] = 1.0;  // keep both classes present
  y[1] = 0.0;
  const double v = losses::total_loss(Variable(y, false), Variable(y, false), kDefault).value().item();
  CHECK(v == doctest::Approx(0.375).epsilon(1e-6));
}

TEST_CASE("an empty mask with an exactly-zero prediction costs nothing in dice") {
  const Tensor p = Tensor::zeros({1, 1, 4, 4});
  const Tensor y = Tensor::zeros({1, 1, 4, 4});
  CHECK(losses::wdice(Variable(p, false), Variable(y, false), kDefault).value().item() ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("reductions match the plain-loop oracle on random batches") {
  for (uint64_t seed = 0; seed < 4; ++seed) {
    const Tensor p = randt({3, 1, 5, 5}, 100 + seed, 0.02, 0.98);
    Tensor y = rand_binary({3, 1, 5, 5}, 200 + seed, seed == 2 ? 0.0 : 0.5);  // seed 2: empty masks
    losses::LossConfig cfg = kDefault;
    if (seed == 3) {
      cfg.w1 = 0.7;
      cfg.w2 = 0.3;
      cfg.canonical_dice = true;
    }
    const double got_bce = losses::wbce(Variable(p, false), Variable(y, false), cfg).value().item();
    const double got_dice = losses::wdice(Variable(p, false), Variable(y, false), cfg).value().item();
    CHECK(got_bce == doctest::Approx(oracle_wbce(p, y, cfg)).epsilon(1e-12));
    CHECK(got_dice == doctest::Approx(oracle_wdice(p, y, cfg)).epsilon(1e-12));
    const double got_total = losses::total_loss(Variable(p, false), Variable(y, false), cfg).value().item();
    CHECK(got_total == doctest::Approx(0.5 * got_bce + 0.5 * got_dice).epsilon(1e-12));
  }
}

TEST_CASE("loss gradients pass the finite-difference check") {
  const Tensor p = randt({2, 1, 3, 3}, 300, 0.1, 0.9);
  const Tensor y = rand_binary({2, 1, 3, 3}, 301);
  auto fd = [&](auto fn) {
    return testutil::gradcheck(
        [&](std::vector<Variable>& v) { return fn(v[0], Variable(y, false), kDefault); }, {p});
  };
  CHECK(fd([](auto& a, auto b, auto c) { return losses::wbce(a, b, c); }) < 1e-6);
  CHECK(fd([](auto& a, auto b, auto c) { return losses::wdice(a, b, c); }) < 1e-6);
  CHECK(fd([](auto& a, auto b, auto c) { return losses::total_loss(a, b, c); }) < 1e-6);
}
