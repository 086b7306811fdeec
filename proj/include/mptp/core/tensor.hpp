// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace mptp {

using Shape = std::vector<int64_t>;

std::string shape_to_string(const Shape& s);

// Dense row-major tensor of doubles. Copies are deep; pass by reference or move.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)) { data_.assign(count(shape_), 0.0); }
  Tensor(Shape shape, double fill) : shape_(std::move(shape)) { data_.assign(count(shape_), fill); }
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double v) { return Tensor(std::move(shape), v); }
  static Tensor scalar(double v) { return Tensor(Shape{1}, v); }

  const Shape& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(int64_t i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool defined() const { return !shape_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const { return shape_to_string(shape_); }
  bool all_finite() const;
  double item() const;

  Tensor reshaped(Shape s) const;

  static int64_t count(const Shape& s);

private:
  Shape shape_;
  std::vector<double> data_;
};

// Throws std::invalid_argument with a message naming `what` when shapes differ.
void check_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace mptp
