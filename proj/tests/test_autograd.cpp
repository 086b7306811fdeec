// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
//
// Central-difference checks for every differentiable op. Inputs are kept away
// from kinks (relu zero, clamp edges, pooling ties) so the numeric derivative
// is trustworthy; the composite-network check lives in the acceptance suite.
#include <doctest.h>

#include <cmath>

#include "mptp/core/ops.hpp"
#include "testutil.hpp"

using namespace mptp;
using testutil::gradcheck;
using testutil::randt;

namespace {

constexpr double kTol = 1e-6;

// Mixes the op output into a scalar with fixed random weights so every output
// coordinate influences the loss differently.
Variable wsum(const Variable& y, uint64_t seed = 999) {
  return ops::sum_all(ops::mul(y, ops::constant(randt(y.shape(), seed))));
}

}  // namespace

TEST_CASE("elementwise arithmetic grads") {
  Tensor a = randt({3, 4}, 1), b = randt({3, 4}, 2, 0.5, 1.5);
  CHECK(gradcheck([](auto& v) { return wsum(ops::add(v[0], v[1])); }, {a, b}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::sub(v[0], v[1])); }, {a, b}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::mul(v[0], v[1])); }, {a, b}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::div(v[0], v[1])); }, {a, b}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::add_scalar(v[0], 3.25)); }, {a}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::mul_scalar(v[0], -1.5)); }, {a}) < kTol);
}

TEST_CASE("nonlinearity grads") {
  Tensor pos = randt({2, 5}, 3, 0.2, 2.0);
  Tensor shifted = randt({2, 5}, 4, 0.3, 1.0);  // away from the relu kink
  Tensor neg = randt({2, 5}, 5, -1.0, -0.3);
  CHECK(gradcheck([](auto& v) { return wsum(ops::relu(v[0])); }, {shifted}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::relu(v[0])); }, {neg}) < kTol);  // flat side
  CHECK(gradcheck([](auto& v) { return wsum(ops::gelu(v[0])); }, {randt({3, 3}, 6, -2.0, 2.0)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::sigmoid(v[0])); }, {randt({3, 3}, 7, -3.0, 3.0)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::log(v[0])); }, {pos}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::sqrt(v[0])); }, {pos}) < kTol);
}

TEST_CASE("clamp grad passes inside, blocks outside") {
  // Coordinates sit clearly inside (0.4..0.6) or clearly outside (>0.9) the
  // clamp window so the finite difference never crosses the boundary.
  Tensor inside = randt({4}, 8, 0.4, 0.6), outside = randt({4}, 9, 0.91, 1.5);
  CHECK(gradcheck([](auto& v) { return wsum(ops::clamp(v[0], 0.1, 0.9)); }, {inside}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::clamp(v[0], 0.1, 0.9)); }, {outside}) < kTol);
}

TEST_CASE("reduction grads") {
  Tensor a = randt({3, 4, 2}, 10);
  CHECK(gradcheck([](auto& v) { return ops::sum_all(v[0]); }, {a}) < kTol);
  CHECK(gradcheck([](auto& v) { return ops::mean_all(v[0]); }, {a}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::sum_per_sample(v[0])); }, {a}) < kTol);
}

TEST_CASE("matmul family grads") {
  CHECK(gradcheck([](auto& v) { return wsum(ops::matmul(v[0], v[1])); }, {randt({3, 4}, 11), randt({4, 2}, 12)}) <
        kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::bmm(v[0], v[1])); },
                  {randt({2, 3, 4}, 13), randt({2, 4, 2}, 14)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::bmm_nt(v[0], v[1])); },
                  {randt({2, 3, 4}, 15), randt({2, 5, 4}, 16)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::matmul_bcast(v[0], v[1])); },
                  {randt({3, 4}, 17), randt({2, 4, 5}, 18)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::linear(v[0], v[1], v[2])); },
                  {randt({2, 3, 5}, 19), randt({4, 5}, 20), randt({4}, 21)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::linear(v[0], v[1], Variable())); },
                  {randt({6, 5}, 22), randt({4, 5}, 23)}) < kTol);
}

TEST_CASE("conv2d grads with stride and padding") {
  CHECK(gradcheck([](auto& v) { return wsum(ops::conv2d(v[0], v[1], v[2], 1, 1)); },
                  {randt({2, 3, 5, 4}, 24), randt({4, 3, 3, 3}, 25), randt({4}, 26)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::conv2d(v[0], v[1], Variable(), 2, 1)); },
                  {randt({1, 2, 7, 5}, 27), randt({3, 2, 3, 3}, 28)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::conv2d(v[0], v[1], v[2], 1, 0)); },
                  {randt({2, 5, 4, 4}, 29), randt({3, 5, 1, 1}, 30), randt({3}, 31)}) < kTol);
}

TEST_CASE("pooling and resampling grads") {
  CHECK(gradcheck([](auto& v) { return wsum(ops::maxpool2x2(v[0])); }, {randt({2, 3, 6, 4}, 32)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::global_avg_pool(v[0])); }, {randt({2, 3, 4, 5}, 33)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::global_max_pool(v[0])); }, {randt({2, 3, 4, 5}, 34)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::broadcast_spatial(v[0], 3, 4)); }, {randt({2, 5}, 35)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::upsample_bilinear(v[0], 8, 6)); }, {randt({2, 3, 4, 3}, 36)}) <
        kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::upsample_bilinear(v[0], 3, 2)); }, {randt({2, 3, 5, 4}, 37)}) <
        kTol);
}

TEST_CASE("normalization grads") {
  CHECK(gradcheck([](auto& v) { return wsum(ops::softmax_lastdim(v[0])); }, {randt({2, 3, 5}, 38)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::layernorm_lastdim(v[0], v[1], v[2], 1e-5)); },
                  {randt({2, 4, 6}, 39), randt({6}, 40, 0.5, 1.5), randt({6}, 41)}) < kTol);

  SUBCASE("batchnorm, training statistics") {
    Tensor rm = Tensor::zeros({3}), rv = Tensor::full({3}, 1.0);
    auto f = [&](std::vector<Variable>& v) {
      return wsum(ops::batchnorm(v[0], v[1], v[2], rm, rv, 0.1, 1e-5, true));
    };
    CHECK(gradcheck(f, {randt({4, 3, 2, 2}, 42), randt({3}, 43, 0.5, 1.5), randt({3}, 44)}) < kTol);
  }
  SUBCASE("batchnorm, frozen statistics") {
    Tensor rm = randt({3}, 45, -0.5, 0.5), rv = randt({3}, 46, 0.5, 1.5);
    auto f = [&](std::vector<Variable>& v) {
      return wsum(ops::batchnorm(v[0], v[1], v[2], rm, rv, 0.1, 1e-5, false));
    };
    CHECK(gradcheck(f, {randt({2, 3, 2, 2}, 47), randt({3}, 48, 0.5, 1.5), randt({3}, 49)}) < kTol);
  }
}

TEST_CASE("shape manipulation grads") {
  CHECK(gradcheck([](auto& v) { return wsum(ops::reshape(v[0], {4, 6})); }, {randt({2, 3, 4}, 50)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::permute(v[0], {2, 0, 1})); }, {randt({2, 3, 4}, 51)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::permute(v[0], {0, 2, 3, 1})); }, {randt({2, 3, 2, 4}, 52)}) <
        kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::concat({v[0], v[1]}, 1)); },
                  {randt({2, 3, 4}, 53), randt({2, 2, 4}, 54)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::concat({v[0], v[1]}, 2)); },
                  {randt({2, 3, 4}, 55), randt({2, 3, 3}, 56)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::space_to_depth_2x2(v[0])); }, {randt({2, 4, 6, 3}, 57)}) < kTol);
  CHECK(gradcheck([](auto& v) { return wsum(ops::depth_to_space_2x2(v[0])); }, {randt({2, 2, 3, 8}, 58)}) < kTol);
}

TEST_CASE("space/depth rearrangements invert each other") {
  Tensor x = randt({2, 4, 6, 5}, 59);
  Variable v(x, false);
  Variable roundtrip = ops::depth_to_space_2x2(ops::space_to_depth_2x2(v));
  REQUIRE(roundtrip.shape() == x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(roundtrip.value()[i] == x[i]);
}

TEST_CASE("dropout p=0 is the identity and draws nothing") {
  Rng rng(123);
  Tensor x = randt({3, 3}, 60);
  Variable v(x, true);
  Variable y = ops::dropout(v, 0.0, rng);
  CHECK(rng.counter() == 0);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.value()[i] == x[i]);
}

TEST_CASE("dropout keeps expectation and routes grads through kept slots") {
  Rng rng(7);
  Tensor x = Tensor::full({10000}, 1.0);
  Variable v(x, true);
  Variable y = ops::dropout(v, 0.25, rng);
  CHECK(rng.counter() == 10000);
  double mean = 0;
  int64_t zeros = 0;
  for (int64_t i = 0; i < y.numel(); ++i) {
    mean += y.value()[i];
    if (y.value()[i] == 0.0) ++zeros;
    else CHECK(y.value()[i] == doctest::Approx(1.0 / 0.75));
  }
  CHECK(mean / 10000.0 == doctest::Approx(1.0).epsilon(0.05));
  CHECK(zeros > 2000);
  CHECK(zeros < 3000);
  backward(ops::sum_all(y));
  for (int64_t i = 0; i < y.numel(); ++i)
    CHECK(v.grad()[i] == (y.value()[i] == 0.0 ? 0.0 : doctest::Approx(1.0 / 0.75)));
}

TEST_CASE("detach cuts the tape") {
  Variable a(randt({3}, 61), true);
  // d/da of detach(a)*a is detach(a), not 2a: the detached branch is constant.
  backward(ops::sum_all(ops::mul(a.detach(), a)));
  for (int64_t i = 0; i < 3; ++i) CHECK(a.grad()[i] == doctest::Approx(a.value()[i]));

  // A graph with no grad-requiring leaves refuses to run backward at all.
  Variable b(randt({3}, 64), true);
  CHECK_THROWS(backward(ops::sum_all(ops::mul(b.detach(), b.detach()))));
}

TEST_CASE("no-grad mode builds leaves only") {
  Variable a(randt({3}, 62), true);
  NoGradGuard ng;
  Variable y = ops::mul(a, a);
  CHECK(y.node()->parents.empty());
  CHECK(!y.requires_grad());
}

TEST_CASE("grads accumulate across backward passes until cleared") {
  Variable a(randt({3}, 63), true);
  backward(ops::sum_all(a));
  backward(ops::sum_all(a));
  for (int64_t i = 0; i < 3; ++i) CHECK(a.grad()[i] == 2.0);
  a.clear_grad();
  CHECK(!a.has_grad());
}
