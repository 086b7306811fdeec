// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mptp/core/tensor.hpp"

namespace mptp::data {

// 8-bit raster, row-major, interleaved channels (1 = gray, 3 = RGB).
struct Image {
  int64_t height = 0;
  int64_t width = 0;
  int64_t channels = 0;
  std::vector<uint8_t> pixels;
};

// Binary PGM (P5) / PPM (P6), plus PNG when built against libpng.
// Formats are picked by extension on write and by magic bytes on read.
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& img);
bool png_supported();

// (1,3,H,W) in [0,1] via bilinear resize; gray sources replicate channels.
Tensor image_to_tensor(const Image& img, int64_t out_h, int64_t out_w);

// (1,1,H,W) binary via nearest-neighbor resize then threshold value > 127.
Tensor mask_to_tensor(const Image& img, int64_t out_h, int64_t out_w);

// (1,1,H,W) binary {0,1} -> 8-bit {0,255} gray image.
Image mask_tensor_to_image(const Tensor& mask);

// NPY v1.0, dtype <f8, C order.
void write_npy(const std::string& path, const Tensor& t);

}  // namespace mptp::data
