// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

#include "shiftnas/shiftparam.hpp"
#include "shiftnas/tensor.hpp"

namespace shiftnas::nn {

struct ConvGeom {
  int stride = 1;
  int pad = 0;
  int dilation = 1;
  int groups = 1;
};

int conv_out_size(int in, int kernel, const ConvGeom& g);

// Output shape for input [N, C, H, W] and weight [O, C/groups, kh, kw].
Shape conv_output_shape(const Shape& x, const Shape& w, const ConvGeom& g);

// Dense real convolution. bias may be null.
Tensor conv2d_real(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeom& g);

// Shift convolution over the Q16.16 view. Each gathered input element is
// shifted by the weight exponent and sign-flipped into a 64-bit accumulator;
// the accumulator is narrowed once per output. No weight multiplications.
FixedTensor conv2d_shift(const FixedTensor& x, const shift::QuantizedView& w, const std::vector<fxp::Fixed>* bias,
                         const ConvGeom& g);

// Gradients of the real convolution. dx / dw may be null to skip.
void conv2d_real_backward(const Tensor& x, const Tensor& w, const Tensor& dy, const ConvGeom& g, Tensor* dx,
                          Tensor* dw);

// Number of worker threads (SHIFTNAS_THREADS, default: hardware concurrency).
int worker_threads();

// Runs fn(i) for i in [0, n). Work is split in contiguous blocks; each index is
// processed by exactly one thread so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace shiftnas::nn
