// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "shiftnas/shiftparam.hpp"
#include "shiftnas/tensor.hpp"

namespace shiftnas::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // coupled L2, applied to `decayed` params only
  bool rectified = false;     // RAdam variance rectification
};

// Adam / RAdam over a fixed parameter list. Shift parameters are never
// weight-decayed and are projected back into their storage range after
// every step.
class Adam {
 public:
  Adam(AdamConfig cfg, std::vector<Parameter*> decayed, std::vector<Parameter*> undecayed = {},
       std::vector<shift::ShiftParam*> shift = {});

  void step();
  void zero_grad();
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  long steps() const { return t_; }

 private:
  struct Slot {
    Parameter* p;
    bool decay;
    std::vector<double> m, v;
  };
  AdamConfig cfg_;
  std::vector<Slot> slots_;
  std::vector<shift::ShiftParam*> shift_;
  long t_ = 0;
};

}  // namespace shiftnas::nn
