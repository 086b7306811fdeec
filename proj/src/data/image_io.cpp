// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/data/image_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mptp/kernels/kernels.hpp"

#if defined(MPTP_HAS_PNG)
#include <png.h>
#endif

namespace mptp::data {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::runtime_error("image " + path + ": " + why);
}

bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

// PNM token reader: skips whitespace and '#' comment lines.
int64_t pnm_int(std::ifstream& in, const std::string& path) {
  int c = in.get();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#')
      while (c != EOF && c != '\n') c = in.get();
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) fail(path, "malformed PNM header");
  int64_t v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = in.get();
  }
  return v;
}

Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  char magic[2];
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    fail(path, "not a binary PGM/PPM (P5/P6)");
  Image img;
  img.channels = magic[1] == '5' ? 1 : 3;
  img.width = pnm_int(in, path);
  img.height = pnm_int(in, path);
  const int64_t maxval = pnm_int(in, path);
  if (maxval <= 0 || maxval > 255) fail(path, "unsupported maxval " + std::to_string(maxval));
  if (img.width <= 0 || img.height <= 0) fail(path, "zero-dimension image");
  img.pixels.resize(static_cast<size_t>(img.width * img.height * img.channels));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) fail(path, "truncated pixel data");
  return img;
}

void write_pnm(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    fail(path, "PNM supports 1 or 3 channels, got " + std::to_string(img.channels));
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << (img.channels == 1 ? "P5" : "P6") << "\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) fail(path, "write failed");
}

#if defined(MPTP_HAS_PNG)
Image read_png(const std::string& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) fail(path, "libpng: begin read failed");
  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image img;
  img.width = png.width;
  img.height = png.height;
  img.channels = gray ? 1 : 3;
  img.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    fail(path, "libpng: read failed");
  }
  return img;
}

void write_png(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    fail(path, "PNG writer supports 1 or 3 channels, got " + std::to_string(img.channels));
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, img.pixels.data(), 0, nullptr))
    fail(path, "libpng: write failed");
}
#endif

}  // namespace

bool png_supported() {
#if defined(MPTP_HAS_PNG)
  return true;
#else
  return false;
#endif
}

Image read_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) fail(path, "cannot open");
  unsigned char magic[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(magic), 2);
  probe.close();
  if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) return read_pnm(path);
  if (magic[0] == 0x89 && magic[1] == 'P') {
#if defined(MPTP_HAS_PNG)
    return read_png(path);
#else
    fail(path, "PNG input but this build lacks libpng (use PGM/PPM)");
#endif
  }
  fail(path, "unrecognized format (expected PGM/PPM" + std::string(png_supported() ? " or PNG" : "") + ")");
}

void write_image(const std::string& path, const Image& img) {
  if (has_suffix(path, ".png")) {
#if defined(MPTP_HAS_PNG)
    write_png(path, img);
    return;
#else
    fail(path, "PNG output but this build lacks libpng (use .pgm/.ppm)");
#endif
  }
  write_pnm(path, img);
}

Tensor image_to_tensor(const Image& img, int64_t out_h, int64_t out_w) {
  if (img.channels != 1 && img.channels != 3)
    throw std::runtime_error("image_to_tensor expects 1 or 3 channels, got " + std::to_string(img.channels));
  const int64_t c = img.channels;
  Tensor planes(Shape{1, c, img.height, img.width});
  double* p = planes.data();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t i = 0; i < img.height * img.width; ++i)
      p[ch * img.height * img.width + i] = static_cast<double>(img.pixels[static_cast<size_t>(i * c + ch)]) / 255.0;
  Tensor resized(Shape{1, c, out_h, out_w});
  kernels::bilinear_forward(planes.data(), resized.data(), 1, c, img.height, img.width, out_h, out_w);
  if (c == 3) return resized;
  Tensor rgb(Shape{1, 3, out_h, out_w});
  for (int64_t ch = 0; ch < 3; ++ch)
    std::memcpy(rgb.data() + ch * out_h * out_w, resized.data(), static_cast<size_t>(out_h * out_w) * sizeof(double));
  return rgb;
}

Tensor mask_to_tensor(const Image& img, int64_t out_h, int64_t out_w) {
  Tensor out(Shape{1, 1, out_h, out_w});
  double* o = out.data();
  for (int64_t oh = 0; oh < out_h; ++oh) {
    const int64_t sh = std::min(img.height - 1, static_cast<int64_t>((static_cast<double>(oh) + 0.5) *
                                                                     static_cast<double>(img.height) /
                                                                     static_cast<double>(out_h)));
    for (int64_t ow = 0; ow < out_w; ++ow) {
      const int64_t sw = std::min(img.width - 1, static_cast<int64_t>((static_cast<double>(ow) + 0.5) *
                                                                      static_cast<double>(img.width) /
                                                                      static_cast<double>(out_w)));
      const uint8_t v = img.pixels[static_cast<size_t>((sh * img.width + sw) * img.channels)];
      o[oh * out_w + ow] = v > 127 ? 1.0 : 0.0;
    }
  }
  return out;
}

Image mask_tensor_to_image(const Tensor& mask) {
  if (mask.rank() != 4 || mask.dim(0) != 1 || mask.dim(1) != 1)
    throw std::runtime_error("mask_tensor_to_image expects (1,1,H,W), got " + mask.shape_str());
  Image img;
  img.height = mask.dim(2);
  img.width = mask.dim(3);
  img.channels = 1;
  img.pixels.resize(static_cast<size_t>(img.height * img.width));
  const double* m = mask.data();
  for (int64_t i = 0; i < img.height * img.width; ++i) img.pixels[static_cast<size_t>(i)] = m[i] > 0.5 ? 255 : 0;
  return img;
}

void write_npy(const std::string& path, const Tensor& t) {
  std::string shape = "(";
  for (int64_t i = 0; i < t.rank(); ++i) shape += std::to_string(t.dim(i)) + ",";
  if (t.rank() > 1) shape.pop_back();
  shape += ")";
  std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': " + shape + ", }";
  const size_t unpadded = 6 + 2 + 2 + dict.size() + 1;
  const size_t padded = (unpadded + 63) / 64 * 64;
  dict.append(padded - unpadded, ' ');
  dict.push_back('\n');
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write("\x93NUMPY\x01\x00", 8);
  const uint16_t hlen = static_cast<uint16_t>(dict.size());
  out.put(static_cast<char>(hlen & 0xff));
  out.put(static_cast<char>(hlen >> 8));
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
  out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace mptp::data
