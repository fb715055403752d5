// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/nn/autograd.hpp"

#include <stdexcept>
#include <unordered_set>

#include "shiftnas/nn/counters.hpp"

namespace shiftnas::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

OpCounters& op_counters() {
  static OpCounters counters;
  return counters;
}

Tensor& Node::grad() {
  if (!grad_ready_) {
    grad_ = Tensor(value.shape);
    grad_ready_ = true;
  }
  return grad_;
}

const Tensor& Node::grad_or_zero() { return grad(); }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->op = "constant";
  n->value = std::move(value);
  return n;
}

Var leaf(Parameter& param) {
  auto n = std::make_shared<Node>();
  n->op = "leaf";
  n->value = param.value;
  if (g_grad_enabled) {
    n->requires_grad = true;
    Parameter* p = &param;
    n->backward_fn = [p](Node& self) {
      if (p->grad.shape != p->value.shape) p->zero_grad();
      const Tensor& g = self.grad();
      for (std::size_t i = 0; i < g.numel(); ++i) p->grad[i] += g[i];
    };
  }
  return n;
}

Var make_node(std::string op, Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn,
              bool owns_params) {
  auto n = std::make_shared<Node>();
  n->op = std::move(op);
  n->value = std::move(value);
  if (!g_grad_enabled) return n;
  bool any = owns_params;
  for (const auto& p : parents) any = any || (p && p->requires_grad);
  if (!any) return n;
  n->requires_grad = true;
  n->parents = std::move(parents);
  n->backward_fn = std::move(backward_fn);
  return n;
}

void backward(const Var& root) {
  if (!root || !root->requires_grad) throw std::logic_error("backward: root does not require gradients");
  if (root->value.numel() != 1) throw std::logic_error("backward: root must be a scalar");

  // Iterative post-order DFS; parents visited in declaration order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (p && p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad().fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

}  // namespace shiftnas::nn
