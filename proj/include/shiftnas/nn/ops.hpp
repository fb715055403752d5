// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "shiftnas/nn/autograd.hpp"
#include "shiftnas/nn/kernels.hpp"
#include "shiftnas/shiftparam.hpp"

namespace shiftnas::nn {

// quantized: rounded weights, Q16.16 inputs/bias, shift kernel, STE backward.
// surrogate: continuous w = S * 2^P in real arithmetic with exact gradients.
enum class WeightMode { quantized, surrogate };

struct ShiftOptions {
  WeightMode mode = WeightMode::quantized;
  shift::SteRule rule = shift::default_ste_rule();
};

void accumulate_grad(Parameter& p, const Tensor& g);

Var add(const Var& a, const Var& b);
Var add_n(const std::vector<Var>& xs);
Var scale(const Var& x, double s);

// sum_k weights[k] * xs[k]; all xs must share a shape.
Var weighted_sum(const std::vector<Var>& xs, const Var& weights);

Var relu(const Var& x);

// Real-valued convolution (control networks). bias may be null.
Var conv2d(const Var& x, Parameter& w, Parameter* bias, const ConvGeom& g);

// Convolution with power-of-two weights. bias may be null.
Var shift_conv2d(const Var& x, shift::ShiftParam& w, Parameter* bias, const ConvGeom& g, const ShiftOptions& opt);

struct BnState {
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  BnState() = default;
  explicit BnState(int channels) : running_mean({channels}, 0.0), running_var({channels}, 1.0) {}
};

// gamma / beta may be null (non-affine). Training mode normalizes with batch
// statistics and updates the running estimates.
Var batch_norm(const Var& x, Parameter* gamma, Parameter* beta, BnState& state, bool training);

// 3x3 pooling with padding 1. Average pooling excludes padded taps.
Var max_pool3x3(const Var& x, int stride);
Var avg_pool3x3(const Var& x, int stride);

// x[:, :, ::stride, ::stride]
Var subsample(const Var& x, int stride);
// x[:, :, 1:, 1:] zero-filled back to the original size.
Var shift_crop(const Var& x);

Var zeros(Shape shape);
Var concat_channels(const std::vector<Var>& xs);
Var global_avg_pool(const Var& x);  // [N,C,H,W] -> [N,C]
Var reshape(const Var& x, Shape shape);

// softmax(logits / temperature) over a 1-D tensor. Throws for temperature <= 0.
Var softmax(const Var& logits, double temperature = 1.0);

// m [rows, cols] times v [cols].
Var matvec(const Tensor& m, const Var& v);

// Mean cross-entropy of logits [N, K] against integer labels.
Var cross_entropy(const Var& logits, std::span<const int> labels);

// (lambda / 2) * sum (2^P * sign(S))^2 over all params.
// dP = lambda * Sq^2 * 4^P * ln2 exactly; dS = lambda * 4^P * Sq (straight-through).
Var shift_weight_l2(const std::vector<shift::ShiftParam*>& params, double lambda);
// (lambda / 2) * sum (P^2 + S^2)
Var raw_l2(const std::vector<shift::ShiftParam*>& params, double lambda);

}  // namespace shiftnas::nn
