// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "mptp/metrics/metrics.hpp"
#include "testutil.hpp"

using namespace mptp;

namespace {

// Builds (1,1,4,4) prediction/target pairs with exact confusion counts.
void fill_counts(Tensor& pred, Tensor& target, int64_t tp, int64_t fp, int64_t fn, int64_t tn) {
  REQUIRE(tp + fp + fn + tn == pred.numel());
  int64_t i = 0;
  for (int64_t k = 0; k < tp; ++k, ++i) pred[i] = 1, target[i] = 1;
  for (int64_t k = 0; k < fp; ++k, ++i) pred[i] = 1, target[i] = 0;
  for (int64_t k = 0; k < fn; ++k, ++i) pred[i] = 0, target[i] = 1;
  for (int64_t k = 0; k < tn; ++k, ++i) pred[i] = 0, target[i] = 0;
}

}  // namespace

TEST_CASE("worked confusion example") {
  Tensor pred = Tensor::zeros({1, 1, 4, 4}), target = pred;
  fill_counts(pred, target, 4, 2, 2, 8);
  const auto c = metrics::confusion(pred, target);
  CHECK(c.tp == 4);
  CHECK(c.fp == 2);
  CHECK(c.fn == 2);
  CHECK(c.tn == 8);
  CHECK(metrics::accuracy(c) == doctest::Approx(0.75));
  CHECK(metrics::miou(c) == doctest::Approx((4.0 / 8.0 + 8.0 / 12.0) / 2.0));  // 0.58333...
  CHECK(metrics::dice_score(pred, target) == doctest::Approx(2.0 * 4.0 / (2.0 * 4.0 + 2.0 + 2.0)));  // 0.6667
  CHECK(metrics::precision(c) == doctest::Approx(4.0 / 6.0));
  CHECK(metrics::recall(c) == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("absent-class conventions") {
  Tensor zero = Tensor::zeros({1, 1, 2, 2});
  SUBCASE("both empty: miou and dice perfect, precision/recall defined as 0") {
    const auto c = metrics::confusion(zero, zero);
    CHECK(metrics::miou(c) == 1.0);
    CHECK(metrics::dice_score(zero, zero) == 1.0);
    CHECK(metrics::precision(c) == 0.0);
    CHECK(metrics::recall(c) == 0.0);
    CHECK(metrics::accuracy(c) == 1.0);
  }
  SUBCASE("both full: the negative class is the absent one") {
    Tensor one = Tensor::full({1, 1, 2, 2}, 1.0);
    const auto c = metrics::confusion(one, one);
    CHECK(metrics::miou(c) == 1.0);
    CHECK(metrics::accuracy(c) == 1.0);
    CHECK(metrics::precision(c) == 1.0);
  }
}

TEST_CASE("confusion rejects empty and non-binary input") {
  Tensor empty;
  CHECK_THROWS(metrics::confusion(empty, empty));
  Tensor soft = Tensor::full({1, 4}, 0.5), bin = Tensor::zeros({1, 4});
  CHECK_THROWS(metrics::confusion(soft, bin));
  CHECK_THROWS(metrics::confusion(bin, soft));
}

TEST_CASE("binarize uses a strict greater-than threshold") {
  Tensor p({1, 4}, {0.2, 0.5, 0.5000001, 0.9});
  const Tensor b = metrics::binarize(p);
  CHECK(b[0] == 0.0);
  CHECK(b[1] == 0.0);  // exactly at threshold -> negative
  CHECK(b[2] == 1.0);
  CHECK(b[3] == 1.0);
  const Tensor c = metrics::binarize(p, 0.15);
  CHECK(c[0] == 1.0);
}

TEST_CASE("metrics agree with direct pixel counting on random masks") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor pred = testutil::rand_binary({1, 1, 8, 8}, 500 + seed);
    const Tensor target = testutil::rand_binary({1, 1, 8, 8}, 600 + seed);
    int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (int64_t i = 0; i < pred.numel(); ++i) {
      if (pred[i] > 0.5 && target[i] > 0.5) ++tp;
      if (pred[i] > 0.5 && target[i] < 0.5) ++fp;
      if (pred[i] < 0.5 && target[i] > 0.5) ++fn;
      if (pred[i] < 0.5 && target[i] < 0.5) ++tn;
    }
    const auto c = metrics::confusion(pred, target);
    CHECK(c.tp == tp);
    CHECK(c.fp == fp);
    CHECK(c.fn == fn);
    CHECK(c.tn == tn);
  }
}
