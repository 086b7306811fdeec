// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "mptp/msff/msff.hpp"
#include "testutil.hpp"

using namespace mptp;
using testutil::randt;

TEST_CASE("slice-concat is exactly the four stride-2 slices in fixed order") {
  const int64_t B = 2, C = 3, H = 6, W = 4;
  const Tensor x = randt({B, C, H, W}, 1);
  const Variable out = msff::PatchMerge::slice_concat(Variable(x, false));
  REQUIRE(out.shape() == Shape{B, H / 2, W / 2, 4 * C});

  const int64_t dh[4] = {0, 1, 0, 1}, dw[4] = {0, 0, 1, 1};
  auto in_at = [&](int64_t b, int64_t c, int64_t y, int64_t xw) {
    return x[((b * C + c) * H + y) * W + xw];
  };
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t i = 0; i < H / 2; ++i) {
      for (int64_t j = 0; j < W / 2; ++j) {
        const double* slot = out.value().data() + ((b * (H / 2) + i) * (W / 2) + j) * 4 * C;
        // Exact placement: block k holds slice offset (dh[k], dw[k]).
        for (int64_t k = 0; k < 4; ++k)
          for (int64_t c = 0; c < C; ++c) CHECK(slot[k * C + c] == in_at(b, c, 2 * i + dh[k], 2 * j + dw[k]));
        // Multiset oracle: the 4C outputs are exactly the 2x2 block's values.
        std::vector<double> got(slot, slot + 4 * C), want;
        for (int64_t k = 0; k < 4; ++k)
          for (int64_t c = 0; c < C; ++c) want.push_back(in_at(b, c, 2 * i + dh[k], 2 * j + dw[k]));
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        CHECK(got == want);
      }
    }
  }
}

TEST_CASE("merge and expand are shape inverses") {
  msff::PatchMerge merge(4);
  msff::PatchExpand expand(8);
  merge.initialize(2);
  expand.initialize(3);
  const Variable x(randt({2, 4, 8, 6}, 4), false);

  const Variable merged = merge.forward(x);
  REQUIRE(merged.shape() == Shape{2, 8, 4, 3});
  CHECK(expand.forward(merged).shape() == x.shape());

  msff::PatchExpand expand4(4);
  msff::PatchMerge merge2(2);
  expand4.initialize(5);
  merge2.initialize(6);
  const Variable expanded = expand4.forward(x);
  REQUIRE(expanded.shape() == Shape{2, 2, 16, 12});
  CHECK(merge2.forward(expanded).shape() == x.shape());
}

TEST_CASE("patch expand requires an even channel count") {
  CHECK_THROWS_AS(msff::PatchExpand{3}, std::invalid_argument);
}

TEST_CASE("fusion triples every level's channels") {
  const int64_t B = 2, C = 4, H = 16, W = 16;
  msff::Msff fuse(C, true);
  fuse.initialize(7);
  fuse.set_training(false);
  const Variable y1(randt({B, C, H, W}, 8), false);
  const Variable y2(randt({B, 2 * C, H / 2, W / 2}, 9), false);
  const Variable y3(randt({B, 4 * C, H / 4, W / 4}, 10), false);
  auto t = fuse.forward(y1, y2, y3);
  CHECK(t[0].shape() == Shape{B, 3 * C, H, W});
  CHECK(t[1].shape() == Shape{B, 6 * C, H / 2, W / 2});
  CHECK(t[2].shape() == Shape{B, 12 * C, H / 4, W / 4});
  for (const auto& v : t) CHECK(v.value().all_finite());
}

TEST_CASE("groups keep identities on the diagonal and rescale the rest") {
  const int64_t B = 1, C = 4, H = 8, W = 8;
  msff::Msff fuse(C, true);
  fuse.initialize(11);
  fuse.set_training(false);
  const Variable y1(randt({B, C, H, W}, 12), false);
  const Variable y2(randt({B, 2 * C, H / 2, W / 2}, 13), false);
  const Variable y3(randt({B, 4 * C, H / 4, W / 4}, 14), false);
  auto groups = fuse.build_groups(y1, y2, y3);

  // groups[k][s]: level k+1 brought to scale s+1.
  for (int64_t k = 0; k < 3; ++k) {
    CHECK(groups[k][0].shape() == Shape{B, C, H, W});
    CHECK(groups[k][1].shape() == Shape{B, 2 * C, H / 2, W / 2});
    CHECK(groups[k][2].shape() == Shape{B, 4 * C, H / 4, W / 4});
  }
  // A level at its own scale passes through untouched.
  const Variable* diag[3] = {&y1, &y2, &y3};
  for (int64_t k = 0; k < 3; ++k)
    for (int64_t i = 0; i < diag[k]->numel(); ++i) CHECK(groups[k][k].value()[i] == diag[k]->value()[i]);
}

TEST_CASE("per-scale concatenation preserves group order") {
  const int64_t B = 1, C = 2, H = 4, W = 4;
  std::array<std::array<Variable, 3>, 3> groups;
  for (int64_t k = 0; k < 3; ++k) {
    groups[k][0] = Variable(Tensor::full({B, C, H, W}, 10.0 + k), false);
    groups[k][1] = Variable(Tensor::full({B, 2 * C, H / 2, W / 2}, 20.0 + k), false);
    groups[k][2] = Variable(Tensor::full({B, 4 * C, H / 4, W / 4}, 30.0 + k), false);
  }
  auto t = msff::Msff::fuse_groups(groups);
  // Scale 1: channels [0,C) from group 0, [C,2C) group 1, [2C,3C) group 2.
  for (int64_t k = 0; k < 3; ++k) CHECK(t[0].value()[k * C * H * W] == 10.0 + k);
  for (int64_t k = 0; k < 3; ++k) CHECK(t[1].value()[k * 2 * C * (H / 2) * (W / 2)] == 20.0 + k);
  for (int64_t k = 0; k < 3; ++k) CHECK(t[2].value()[k * 4 * C * (H / 4) * (W / 4)] == 30.0 + k);
}

TEST_CASE("disabled fusion still matches the decoder's channel contract") {
  const int64_t B = 2, C = 4, H = 16, W = 16;
  msff::Msff bypass(C, false);
  bypass.initialize(15);
  bypass.set_training(false);
  auto t = bypass.forward(Variable(randt({B, C, H, W}, 16), false),
                          Variable(randt({B, 2 * C, H / 2, W / 2}, 17), false),
                          Variable(randt({B, 4 * C, H / 4, W / 4}, 18), false));
  CHECK(t[0].shape() == Shape{B, 3 * C, H, W});
  CHECK(t[1].shape() == Shape{B, 6 * C, H / 2, W / 2});
  CHECK(t[2].shape() == Shape{B, 12 * C, H / 4, W / 4});
  CHECK_THROWS_AS((void)bypass.build_groups(Variable(randt({B, C, H, W}, 19), false),
                                            Variable(randt({B, 2 * C, H / 2, W / 2}, 20), false),
                                            Variable(randt({B, 4 * C, H / 4, W / 4}, 21), false)),
                  std::logic_error);
}
