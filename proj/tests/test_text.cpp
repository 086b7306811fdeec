// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <string>
#include <vector>

#include "mptp/text/embedder.hpp"
#include "mptp/text/text_encoder.hpp"
#include "testutil.hpp"

using namespace mptp;

TEST_CASE("caption preparation trims, rejects empty, truncates long") {
  CHECK(text::prepare_caption("  a red box  ") == "a red box");
  CHECK_THROWS_AS((void)text::prepare_caption("   "), std::invalid_argument);
  const std::string long_caption(100, 'x');
  CHECK(text::prepare_caption(long_caption).size() == 64);
}

TEST_CASE("tokenizer lowercases and splits on non-alphanumerics") {
  auto toks = text::tokenize("Bright Square, in the TOP-left!");
  const std::vector<std::string> want = {"bright", "square", "in", "the", "top", "left"};
  CHECK(toks == want);
}

TEST_CASE("toy embedder is deterministic and pads with a shared row") {
  text::ToyEmbedder emb;
  const Tensor a = emb.embed("a cat", 6);
  const Tensor b = emb.embed("a cat", 6);
  REQUIRE(a.shape() == Shape{1, 6, 768});
  for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);

  // Rows 2..5 are all [PAD]; they must be identical to each other.
  for (int64_t r = 3; r < 6; ++r)
    for (int64_t c = 0; c < 768; ++c) CHECK(a[(2 * 768) + c] == a[(r * 768) + c]);

  // Same leading token, different trailing token: row 0 equal, row 1 not.
  const Tensor c = emb.embed("a dog", 6);
  for (int64_t j = 0; j < 768; ++j) CHECK(a[j] == c[j]);
  bool row1_differs = false;
  for (int64_t j = 0; j < 768 && !row1_differs; ++j) row1_differs = a[768 + j] != c[768 + j];
  CHECK(row1_differs);
}

TEST_CASE("toy embedding rows have unit-order scale") {
  text::ToyEmbedder emb;
  const Tensor a = emb.embed("token", 1);
  double sq = 0;
  for (int64_t j = 0; j < 768; ++j) sq += a[j] * a[j];
  // Each entry ~ N(0, 1/768), so the squared norm concentrates near 1.
  CHECK(sq > 0.5);
  CHECK(sq < 2.0);
}

TEST_CASE("unknown embedder kind is rejected") {
  CHECK_THROWS_AS((void)text::make_embedder("glove", ""), std::invalid_argument);
}

TEST_CASE("caption pyramid emits four widths from one 768 input") {
  const int64_t d1 = 6, B = 2, L = 5;
  text::TextEncoder enc(768, d1);
  enc.initialize(3);
  Variable x(testutil::randt({B, L, 768}, 11), false);
  auto levels = enc.forward(x);
  REQUIRE(levels.size() == 4);
  CHECK(levels[0].shape() == Shape{B, L, d1});
  CHECK(levels[1].shape() == Shape{B, L, 2 * d1});
  CHECK(levels[2].shape() == Shape{B, L, 4 * d1});
  CHECK(levels[3].shape() == Shape{B, L, 8 * d1});
}

TEST_CASE("caption pyramid is a chain: level 1 depends on every projection") {
  // Zeroing the widest projection must change level 1, confirming the chain
  // 768 -> 8D -> 4D -> 2D -> D rather than four parallel taps.
  const int64_t d1 = 4;
  text::TextEncoder enc(768, d1);
  enc.initialize(5);
  Variable x(testutil::randt({1, 3, 768}, 21), false);
  const Tensor before = enc.forward(x)[0].value();
  for (auto& [name, p] : enc.named_parameters()) {
    if (name.rfind("proj4.", 0) == 0)
      for (int64_t i = 0; i < p->numel(); ++i) p->value_mut().data()[i] = 0.0;
  }
  const Tensor after = enc.forward(x)[0].value();
  bool changed = false;
  for (int64_t i = 0; i < before.numel() && !changed; ++i) changed = before[i] != after[i];
  CHECK(changed);
}

TEST_CASE("bad text input shapes are rejected") {
  text::TextEncoder enc(768, 4);
  enc.initialize(1);
  CHECK_THROWS(enc.forward(Variable(testutil::randt({2, 5, 100}, 31), false)));
}
