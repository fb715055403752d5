// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "shiftnas/tensor.hpp"

// Tape-free reverse-mode autograd. Every op returns a Var holding its output
// and, when gradients are enabled, a closure that pushes the node's gradient
// into its parents. backward() orders the graph topologically from the root
// and runs each closure exactly once.

namespace shiftnas::nn {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  std::string op;
  Tensor value;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;

  Tensor& grad();
  bool has_grad() const { return grad_ready_; }
  const Tensor& grad_or_zero();

 private:
  Tensor grad_;
  bool grad_ready_ = false;
};

bool grad_enabled();

// Disables graph recording for its lifetime (evaluation passes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

Var constant(Tensor value);

// Leaf bound to a Parameter; backward accumulates into param.grad.
Var leaf(Parameter& param);

// Builds a node; parents and the closure are dropped when no parent needs a
// gradient, unless the op itself writes into trainable parameters.
Var make_node(std::string op, Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn,
              bool owns_params = false);

// Runs reverse-mode accumulation from a scalar root (seed gradient 1).
// Throws std::logic_error when the root does not require gradients.
void backward(const Var& root);

}  // namespace shiftnas::nn
