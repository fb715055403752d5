// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "shiftnas/fxp.hpp"

namespace shiftnas {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major real tensor. Activations use NCHW.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> values);

  std::size_t numel() const { return data.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
  int rank() const { return static_cast<int>(shape.size()); }
  bool empty() const { return data.empty(); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  std::span<double> span() { return data; }
  std::span<const double> span() const { return data; }

  void fill(double v);
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// Q16.16 view of a tensor; the hardware-emulating representation.
struct FixedTensor {
  Shape shape;
  std::vector<fxp::Fixed> data;

  FixedTensor() = default;
  explicit FixedTensor(Shape s) : shape(std::move(s)), data(shape_numel(shape)) {}

  std::size_t numel() const { return data.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
};

FixedTensor to_fixed(const Tensor& t);
Tensor to_real(const FixedTensor& t);

// Trainable tensor with its gradient buffer.
struct Parameter {
  Tensor value;
  Tensor grad;

  Parameter() = default;
  explicit Parameter(Tensor v) : value(std::move(v)), grad(value.shape) {}
  void zero_grad() { grad = Tensor(value.shape); }
};

// Throws std::invalid_argument naming `what` when shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace shiftnas
