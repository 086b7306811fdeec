// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
//
// Parallel kernels vs the serial reference implementations. Shapes are chosen
// to miss tile boundaries (primes) so partial tiles and remainders get hit.
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mptp/kernels/kernels.hpp"
#include "mptp/kernels/reference.hpp"
#include "testutil.hpp"

using namespace mptp;
using testutil::randt;

namespace {

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<double> vec(const Tensor& t) { return {t.data(), t.data() + t.numel()}; }

}  // namespace

TEST_CASE("gemm variants match the reference on prime shapes") {
  const int64_t M = 37, N = 23, K = 41;
  Tensor A = randt({M, K}, 1), B = randt({K, N}, 2), Bt = randt({N, K}, 3), At = randt({K, M}, 4);
  std::vector<double> c0(static_cast<size_t>(M * N), 0.5), c1 = c0;

  SUBCASE("nn, overwrite") {
    refk::gemm_nn(M, N, K, A.data(), B.data(), c0.data(), false);
    kernels::gemm_nn(M, N, K, A.data(), B.data(), c1.data(), false);
    CHECK(max_diff(c0, c1) < 1e-12);
  }
  SUBCASE("nn, accumulate keeps the prior contents") {
    refk::gemm_nn(M, N, K, A.data(), B.data(), c0.data(), true);
    kernels::gemm_nn(M, N, K, A.data(), B.data(), c1.data(), true);
    CHECK(max_diff(c0, c1) < 1e-12);
    CHECK(c1[0] != doctest::Approx(0.0).epsilon(1e-9));  // 0.5 base survived
  }
  SUBCASE("nt") {
    refk::gemm_nt(M, N, K, A.data(), Bt.data(), c0.data(), false);
    kernels::gemm_nt(M, N, K, A.data(), Bt.data(), c1.data(), false);
    CHECK(max_diff(c0, c1) < 1e-12);
  }
  SUBCASE("tn") {
    refk::gemm_tn(M, N, K, At.data(), B.data(), c0.data(), false);
    kernels::gemm_tn(M, N, K, At.data(), B.data(), c1.data(), false);
    CHECK(max_diff(c0, c1) < 1e-12);
  }
}

TEST_CASE("conv2d forward/backward match the reference") {
  const int64_t B = 2, Ci = 3, H = 13, W = 11, Co = 5, k = 3;
  for (int64_t stride : {int64_t(1), int64_t(2)}) {
    const int64_t pad = 1;
    const int64_t Ho = (H + 2 * pad - k) / stride + 1, Wo = (W + 2 * pad - k) / stride + 1;
    Tensor x = randt({B, Ci, H, W}, 10 + stride), w = randt({Co, Ci, k, k}, 20), bias = randt({Co}, 30);
    Tensor y0 = Tensor::zeros({B, Co, Ho, Wo}), y1 = y0;
    refk::conv2d_forward(x.data(), w.data(), bias.data(), y0.data(), B, Ci, H, W, Co, k, k, stride, pad);
    kernels::conv2d_forward(x.data(), w.data(), bias.data(), y1.data(), B, Ci, H, W, Co, k, k, stride, pad);
    CHECK(max_diff(vec(y0), vec(y1)) < 1e-12);

    Tensor dy = randt({B, Co, Ho, Wo}, 40);
    Tensor dx0 = Tensor::zeros({B, Ci, H, W}), dx1 = dx0;
    refk::conv2d_backward_input(dy.data(), w.data(), dx0.data(), B, Ci, H, W, Co, k, k, stride, pad);
    kernels::conv2d_backward_input(dy.data(), w.data(), dx1.data(), B, Ci, H, W, Co, k, k, stride, pad);
    CHECK(max_diff(vec(dx0), vec(dx1)) < 1e-12);

    Tensor dw0 = Tensor::zeros({Co, Ci, k, k}), dw1 = dw0, db0 = Tensor::zeros({Co}), db1 = db0;
    refk::conv2d_backward_weights(dy.data(), x.data(), dw0.data(), db0.data(), B, Ci, H, W, Co, k, k, stride, pad);
    kernels::conv2d_backward_weights(dy.data(), x.data(), dw1.data(), db1.data(), B, Ci, H, W, Co, k, k, stride, pad);
    CHECK(max_diff(vec(dw0), vec(dw1)) < 1e-12);
    CHECK(max_diff(vec(db0), vec(db1)) < 1e-12);
  }
}

TEST_CASE("conv2d 1x1 fast path matches the reference") {
  const int64_t B = 3, Ci = 7, H = 9, W = 5, Co = 4;
  Tensor x = randt({B, Ci, H, W}, 50), w = randt({Co, Ci, 1, 1}, 51), bias = randt({Co}, 52);
  Tensor y0 = Tensor::zeros({B, Co, H, W}), y1 = y0;
  refk::conv2d_forward(x.data(), w.data(), bias.data(), y0.data(), B, Ci, H, W, Co, 1, 1, 1, 0);
  kernels::conv2d_forward(x.data(), w.data(), bias.data(), y1.data(), B, Ci, H, W, Co, 1, 1, 1, 0);
  CHECK(max_diff(vec(y0), vec(y1)) < 1e-12);
}

TEST_CASE("maxpool2x2 matches the reference, indices included") {
  const int64_t B = 2, C = 3, H = 8, W = 6;
  Tensor x = randt({B, C, H, W}, 60);
  Tensor y0 = Tensor::zeros({B, C, H / 2, W / 2}), y1 = y0;
  std::vector<int64_t> a0(static_cast<size_t>(y0.numel())), a1 = a0;
  refk::maxpool2x2_forward(x.data(), y0.data(), a0.data(), B, C, H, W);
  kernels::maxpool2x2_forward(x.data(), y1.data(), a1.data(), B, C, H, W);
  CHECK(max_diff(vec(y0), vec(y1)) == 0.0);
  CHECK(a0 == a1);
}

TEST_CASE("bilinear resize matches the reference and is exact at identity") {
  const int64_t B = 2, C = 3, H = 7, W = 5;
  Tensor x = randt({B, C, H, W}, 70);
  SUBCASE("identity") {
    Tensor y = Tensor::zeros({B, C, H, W});
    kernels::bilinear_forward(x.data(), y.data(), B, C, H, W, H, W);
    CHECK(max_diff(vec(x), vec(y)) == 0.0);
  }
  for (auto [ho, wo] : {std::pair<int64_t, int64_t>{14, 10}, {3, 4}}) {
    Tensor y0 = Tensor::zeros({B, C, ho, wo}), y1 = y0;
    refk::bilinear_forward(x.data(), y0.data(), B, C, H, W, ho, wo);
    kernels::bilinear_forward(x.data(), y1.data(), B, C, H, W, ho, wo);
    CHECK(max_diff(vec(y0), vec(y1)) < 1e-12);
  }
}

TEST_CASE("softmax rows match the reference and normalize") {
  const int64_t R = 17, C = 13;
  Tensor x = randt({R, C}, 80, -30.0, 30.0);  // wide range exercises the max-shift
  Tensor y0 = Tensor::zeros({R, C}), y1 = y0;
  refk::softmax_rows(x.data(), y0.data(), R, C);
  kernels::softmax_rows(x.data(), y1.data(), R, C);
  CHECK(max_diff(vec(y0), vec(y1)) < 1e-13);
  for (int64_t r = 0; r < R; ++r) {
    double s = 0;
    for (int64_t c = 0; c < C; ++c) s += y1[r * C + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("deterministic reductions are reproducible and near the serial sum") {
  // 8191 straddles the fixed accumulation chunk, so the tree layout is hit.
  for (int64_t n : {int64_t(1), int64_t(4096), int64_t(4097), int64_t(8191)}) {
    Tensor x = randt({n}, 90 + n);
    const double s1 = kernels::sum_det(x.data(), n);
    const double s2 = kernels::sum_det(x.data(), n);
    CHECK(s1 == s2);  // bitwise: fixed chunking, no thread-order dependence
    CHECK(testutil::rel_err(s1, refk::sum(x.data(), n)) < 1e-12);

    Tensor y = randt({n}, 91 + n);
    double naive = 0;
    for (int64_t i = 0; i < n; ++i) naive += x.data()[i] * y.data()[i];
    CHECK(testutil::rel_err(kernels::dot_det(x.data(), y.data(), n), naive) < 1e-12);
  }
}
