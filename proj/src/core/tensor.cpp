// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/core/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mptp {

std::string shape_to_string(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << ")";
  return os.str();
}

int64_t Tensor::count(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_to_string(s));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<int64_t>(data_.size()) != count(shape_))
    throw std::invalid_argument("data size " + std::to_string(data_.size()) + " does not match shape " +
                                shape_to_string(shape_));
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("item() on tensor with " + std::to_string(numel()) + " elements");
  return data_[0];
}

Tensor Tensor::reshaped(Shape s) const {
  if (count(s) != numel())
    throw std::invalid_argument("cannot reshape " + shape_str() + " to " + shape_to_string(s));
  Tensor out = *this;
  out.shape_ = std::move(s);
  return out;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace mptp
