// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <limits>
#include <stdexcept>
#include <string>

#include "mptp/core/tensor.hpp"

using namespace mptp;

TEST_CASE("tensor construction and fill") {
  Tensor z = Tensor::zeros({2, 3});
  CHECK(z.numel() == 6);
  CHECK(z.rank() == 2);
  CHECK(z.dim(1) == 3);
  for (int64_t i = 0; i < 6; ++i) CHECK(z[i] == 0.0);

  Tensor f = Tensor::full({4}, 2.5);
  for (int64_t i = 0; i < 4; ++i) CHECK(f[i] == 2.5);

  CHECK(Tensor::scalar(7.0).item() == 7.0);
  CHECK(!Tensor().defined());
}

TEST_CASE("tensor copies are deep") {
  Tensor a = Tensor::full({3}, 1.0);
  Tensor b = a;
  b[0] = 9.0;
  CHECK(a[0] == 1.0);
}

TEST_CASE("reshaped preserves data and validates the element count") {
  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = a.reshaped({3, 2});
  CHECK(b.dim(0) == 3);
  CHECK(b[4] == 5.0);
  CHECK_THROWS_AS((void)a.reshaped({4, 2}), std::invalid_argument);
}

TEST_CASE("shape mismatch reporting names the call site") {
  Tensor a = Tensor::zeros({2, 2});
  Tensor b = Tensor::zeros({2, 3});
  try {
    check_same_shape(a, b, "combine");
    FAIL("expected a shape mismatch");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("combine") != std::string::npos);
  }
}

TEST_CASE("all_finite flags NaN and infinity") {
  Tensor a = Tensor::zeros({3});
  CHECK(a.all_finite());
  a[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK(!a.all_finite());
  a[1] = std::numeric_limits<double>::infinity();
  CHECK(!a.all_finite());
}
