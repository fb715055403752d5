// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/nn/optim.hpp"

#include <cmath>

namespace shiftnas::nn {

Adam::Adam(AdamConfig cfg, std::vector<Parameter*> decayed, std::vector<Parameter*> undecayed,
           std::vector<shift::ShiftParam*> shift)
    : cfg_(cfg), shift_(std::move(shift)) {
  auto push = [&](Parameter* p, bool decay) {
    slots_.push_back({p, decay, std::vector<double>(p->value.numel()), std::vector<double>(p->value.numel())});
  };
  for (auto* p : decayed) push(p, true);
  for (auto* p : undecayed) push(p, false);
  for (auto* s : shift_) {
    push(&s->P, false);
    push(&s->S, false);
  }
}

void Adam::zero_grad() {
  for (auto& s : slots_) s.p->zero_grad();
}

void Adam::step() {
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double b2t = std::pow(b2, static_cast<double>(t_));
  const double bc2 = 1.0 - b2t;

  // Rectification term; rect < 0 means "use the un-adapted momentum step".
  double rect = 1.0;
  if (cfg_.rectified) {
    const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
    const double rho_t = rho_inf - 2.0 * static_cast<double>(t_) * b2t / bc2;
    rect = rho_t > 5.0 ? std::sqrt((rho_t - 4.0) * (rho_t - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t))
                       : -1.0;
  }

  for (auto& s : slots_) {
    Tensor& w = s.p->value;
    if (s.p->grad.shape != w.shape) s.p->zero_grad();
    const Tensor& g = s.p->grad;
    for (std::size_t i = 0; i < w.numel(); ++i) {
      double gi = g[i];
      if (s.decay) gi += cfg_.weight_decay * w[i];
      s.m[i] = b1 * s.m[i] + (1.0 - b1) * gi;
      s.v[i] = b2 * s.v[i] + (1.0 - b2) * gi * gi;
      const double m_hat = s.m[i] / bc1;
      if (rect < 0.0)
        w[i] -= cfg_.lr * m_hat;
      else if (cfg_.rectified)
        w[i] -= cfg_.lr * rect * m_hat * std::sqrt(bc2) / (std::sqrt(s.v[i]) + cfg_.eps);
      else
        w[i] -= cfg_.lr * m_hat / (std::sqrt(s.v[i] / bc2) + cfg_.eps);
    }
  }
  for (auto* sp : shift_) sp->clamp();
}

}  // namespace shiftnas::nn
