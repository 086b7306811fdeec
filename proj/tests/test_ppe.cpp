// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "mptp/core/ops.hpp"
#include "mptp/ppe/ppe.hpp"
#include "testutil.hpp"

using namespace mptp;
using testutil::randt;

namespace {

ppe::PpeConfig small_cfg(int64_t c = 4, int64_t h = 32, int64_t w = 32) {
  ppe::PpeConfig cfg = testutil::tiny_config(c).model;
  cfg.image_h = h;
  cfg.image_w = w;
  return cfg;
}

Variable text_for(const ppe::PpeConfig& cfg, uint64_t seed, int64_t batch = 2) {
  return Variable(randt({batch, cfg.text_len, cfg.embed_dims[0]}, seed), false);
}

}  // namespace

TEST_CASE("encoder config validation names the violated rule") {
  auto expect_reject = [](ppe::PpeConfig cfg) { CHECK_THROWS_AS(cfg.validate(), std::invalid_argument); };
  ppe::PpeConfig ok = small_cfg();
  CHECK_NOTHROW(ok.validate());

  ppe::PpeConfig bad = ok;
  bad.image_h = 30;  // not a multiple of 16
  expect_reject(bad);

  bad = ok;
  bad.patch_sizes = {16, 8, 2};  // level-3 grid 4x4 vs 2x2 elsewhere
  expect_reject(bad);

  bad = ok;
  bad.patch_sizes = {16, 6, 4};  // 16 does not divide by 6
  expect_reject(bad);

  bad = ok;
  bad.embed_dims = {5, 8, 16};  // 5 not divisible by 2 heads
  expect_reject(bad);

  bad = ok;
  bad.dropout = 1.0;
  expect_reject(bad);

  bad = ok;
  bad.text_len = 0;
  expect_reject(bad);
}

TEST_CASE("image branch emits the three-level pyramid") {
  ppe::ImageBranch branch(4);
  branch.initialize(7);
  auto levels = branch.forward(Variable(randt({2, 3, 32, 32}, 1), false));
  CHECK(levels[0].shape() == Shape{2, 4, 32, 32});
  CHECK(levels[1].shape() == Shape{2, 8, 16, 16});
  CHECK(levels[2].shape() == Shape{2, 16, 8, 8});
  CHECK_THROWS(branch.forward(Variable(randt({2, 1, 32, 32}, 2), false)));
}

TEST_CASE("encoder outputs keep the image-pyramid geometry") {
  const ppe::PpeConfig cfg = small_cfg();
  ppe::Ppe enc(cfg);
  enc.initialize(11);
  enc.set_training(false);
  auto out = enc.forward(Variable(randt({2, 3, 32, 32}, 3), false), text_for(cfg, 4));
  CHECK(out[0].shape() == Shape{2, 4, 32, 32});
  CHECK(out[1].shape() == Shape{2, 8, 16, 16});
  CHECK(out[2].shape() == Shape{2, 16, 8, 8});
  for (const auto& o : out) CHECK(o.value().all_finite());
}

TEST_CASE("encoder handles non-square inputs") {
  const ppe::PpeConfig cfg = small_cfg(4, 32, 64);  // token grid 2x4
  ppe::Ppe enc(cfg);
  enc.initialize(13);
  enc.set_training(false);
  auto out = enc.forward(Variable(randt({1, 3, 32, 64}, 5), false), text_for(cfg, 6, 1));
  CHECK(out[0].shape() == Shape{1, 4, 32, 64});
  CHECK(out[1].shape() == Shape{1, 8, 16, 32});
  CHECK(out[2].shape() == Shape{1, 16, 8, 16});
}

TEST_CASE("same seed, same output; different seed, different output") {
  const ppe::PpeConfig cfg = small_cfg();
  const Tensor img = randt({2, 3, 32, 32}, 7);
  const Tensor txt = randt({2, cfg.text_len, cfg.embed_dims[0]}, 8);
  auto run = [&](uint64_t seed) {
    ppe::Ppe enc(cfg);
    enc.initialize(seed);
    enc.set_training(false);
    NoGradGuard ng;
    return enc.forward(Variable(img, false), Variable(txt, false))[0].value();
  };
  const Tensor a = run(42), b = run(42), c = run(43);
  for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
  bool differs = false;
  for (int64_t i = 0; i < a.numel() && !differs; ++i) differs = a[i] != c[i];
  CHECK(differs);
}

TEST_CASE("the caption actually conditions the features") {
  const ppe::PpeConfig cfg = small_cfg();
  ppe::Ppe enc(cfg);
  enc.initialize(17);
  enc.set_training(false);
  NoGradGuard ng;
  const Tensor img = randt({1, 3, 32, 32}, 9);
  const Tensor out1 = enc.forward(Variable(img, false), text_for(cfg, 10, 1)).at(0).value();
  const Tensor out2 = enc.forward(Variable(img, false), text_for(cfg, 11, 1)).at(0).value();
  bool differs = false;
  for (int64_t i = 0; i < out1.numel() && !differs; ++i) differs = out1[i] != out2[i];
  CHECK(differs);
}

TEST_CASE("every encoder parameter receives gradient in the default wiring") {
  const ppe::PpeConfig cfg = small_cfg();
  ppe::Ppe enc(cfg);
  enc.initialize(19);
  enc.set_training(true);
  auto out = enc.forward(Variable(randt({2, 3, 32, 32}, 12), false), text_for(cfg, 13));
  Variable loss = ops::add(ops::add(ops::sum_all(out[0]), ops::sum_all(out[1])), ops::sum_all(out[2]));
  backward(loss);
  for (auto& [name, p] : enc.named_parameters()) {
    INFO("parameter ", name);
    CHECK(p->has_grad());
  }
}

TEST_CASE("ablations still produce well-formed outputs") {
  for (int mode = 0; mode < 2; ++mode) {
    ppe::PpeConfig cfg = small_cfg();
    if (mode == 0)
      cfg.use_downvit = false;
    else
      cfg.use_upvit = false;
    ppe::Ppe enc(cfg);
    enc.initialize(23);
    enc.set_training(false);
    NoGradGuard ng;
    auto out = enc.forward(Variable(randt({2, 3, 32, 32}, 14), false), text_for(cfg, 15));
    CHECK(out[0].shape() == Shape{2, 4, 32, 32});
    CHECK(out[2].shape() == Shape{2, 16, 8, 8});
    for (const auto& o : out) CHECK(o.value().all_finite());
  }
}

TEST_CASE("construction rejects a config whose token grids disagree") {
  ppe::PpeConfig cfg = small_cfg();
  cfg.patch_sizes = {16, 4, 4};
  CHECK_THROWS_AS(ppe::Ppe{cfg}, std::invalid_argument);
}
