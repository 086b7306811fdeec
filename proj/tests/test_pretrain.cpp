// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "mptp/core/ops.hpp"
#include "mptp/pretrain/pretrain.hpp"
#include "testutil.hpp"

using namespace mptp;
using testutil::randt;

TEST_CASE("projector and predictor head shapes") {
  pretrain::Projector proj(4, 16);  // consumes the 7C pooled descriptor
  proj.initialize(1);
  proj.set_training(true);
  const std::array<Variable, 3> pyramid = {Variable(randt({2, 4, 8, 8}, 2), false),
                                           Variable(randt({2, 8, 4, 4}, 3), false),
                                           Variable(randt({2, 16, 2, 2}, 4), false)};
  const Variable y = proj.forward(pyramid);
  CHECK(y.shape() == Shape{2, 16});

  pretrain::Predictor pred(16);
  pred.initialize(5);
  pred.set_training(true);
  CHECK(pred.forward(y).shape() == Shape{2, 16});

  CHECK_THROWS_AS(pretrain::Predictor{18}, std::invalid_argument);  // bottleneck needs z % 4 == 0
}

TEST_CASE("negative cosine hits its closed-form extremes") {
  const Tensor a = randt({3, 8}, 6);
  Tensor b = a;
  for (int64_t i = 0; i < b.numel(); ++i) b[i] = -b[i];
  // The 1e-8 norm guard keeps |cos| strictly below 1, hence the tolerance.
  CHECK(pretrain::neg_cosine(Variable(a, false), Variable(a, false)).value().item() ==
        doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(pretrain::neg_cosine(Variable(a, false), Variable(b, false)).value().item() ==
        doctest::Approx(1.0).epsilon(1e-6));
  for (uint64_t s = 0; s < 5; ++s) {
    const double v =
        pretrain::neg_cosine(Variable(randt({4, 6}, 10 + s), false), Variable(randt({4, 6}, 20 + s), false))
            .value()
            .item();
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("the similarity target branch is stop-gradient") {
  Variable p(randt({2, 8}, 30), true);
  Variable z(randt({2, 8}, 31), true);
  backward(pretrain::neg_cosine(p, z));
  CHECK(p.has_grad());
  CHECK(!z.has_grad());  // detached inside: no gradient reaches the target
}

TEST_CASE("negative cosine gradient passes finite differences") {
  const Tensor p = randt({3, 6}, 32), z = randt({3, 6}, 33);
  CHECK(testutil::gradcheck(
            [&](std::vector<Variable>& v) { return pretrain::neg_cosine(v[0], Variable(z, false)); }, {p}) <
        1e-6);
}

TEST_CASE("two-view tower: output shapes, loss range, full name space") {
  const auto cfg = testutil::tiny_config();
  pretrain::PretrainModel model(cfg.model, cfg.proj_dim);
  model.initialize(7);
  model.set_training(true);

  const Variable img1(randt({2, 3, 32, 32}, 40, 0.0, 1.0), false);
  const Variable img2(randt({2, 3, 32, 32}, 41, 0.0, 1.0), false);
  const Variable text(randt({2, cfg.model.text_len, 768}, 42), false);

  const auto v1 = model.forward_view(img1, text);
  const auto v2 = model.forward_view(img2, text);
  CHECK(v1.y.shape() == Shape{2, cfg.proj_dim});
  CHECK(v1.p.shape() == Shape{2, cfg.proj_dim});

  const Variable loss = model.symmetric_loss(v1, v2);
  const double lv = loss.value().item();
  CHECK(lv >= -2.0);
  CHECK(lv <= 2.0);

  bool has_text = false, has_ppe = false, has_proj = false, has_pred = false;
  for (auto& [name, p] : model.named_parameters()) {
    has_text |= name.rfind("text_encoder.", 0) == 0;
    has_ppe |= name.rfind("ppe.", 0) == 0;
    has_proj |= name.rfind("projector.", 0) == 0;
    has_pred |= name.rfind("predictor.", 0) == 0;
  }
  CHECK(has_text);
  CHECK(has_ppe);
  CHECK(has_proj);
  CHECK(has_pred);

  // The symmetric construction feeds gradient to every parameter: encoder and
  // projector through the online branches, predictor through both heads.
  backward(loss);
  for (auto& [name, p] : model.named_parameters()) {
    INFO("parameter ", name);
    CHECK(p->has_grad());
  }
}
