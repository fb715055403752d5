// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace shiftnas {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_str(s));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(shape_numel(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != shape_numel(shape))
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                                shape_str(shape));
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

FixedTensor to_fixed(const Tensor& t) {
  FixedTensor f(t.shape);
  for (std::size_t i = 0; i < t.numel(); ++i) f.data[i] = fxp::Fixed::from_real(t.data[i]);
  return f;
}

Tensor to_real(const FixedTensor& t) {
  Tensor r(t.shape);
  for (std::size_t i = 0; i < t.numel(); ++i) r.data[i] = t.data[i].to_real();
  return r;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape != b.shape)
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                                shape_str(b.shape));
}

}  // namespace shiftnas
