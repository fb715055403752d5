// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>

namespace shiftnas::nn {

// Plain copy of the instrumentation counters.
struct OpCounts {
  std::uint64_t adds = 0;
  std::uint64_t shifts = 0;
  std::uint64_t flips = 0;
  std::uint64_t weight_muls = 0;   // multiplications by a weight value
  std::uint64_t affine_muls = 0;   // per-channel normalization / averaging constants
  std::uint64_t real_weight_reads = 0;

  OpCounts operator-(const OpCounts& o) const {
    return {adds - o.adds,     shifts - o.shifts,           flips - o.flips,
            weight_muls - o.weight_muls, affine_muls - o.affine_muls, real_weight_reads - o.real_weight_reads};
  }
};

// Process-wide counters. Kernels accumulate locally and publish once per call.
class OpCounters {
 public:
  void add(const OpCounts& c) {
    adds_ += c.adds;
    shifts_ += c.shifts;
    flips_ += c.flips;
    weight_muls_ += c.weight_muls;
    affine_muls_ += c.affine_muls;
    real_weight_reads_ += c.real_weight_reads;
  }
  OpCounts snapshot() const {
    return {adds_.load(), shifts_.load(), flips_.load(), weight_muls_.load(), affine_muls_.load(), real_weight_reads_.load()};
  }
  void reset() {
    for (auto* c : {&adds_, &shifts_, &flips_, &weight_muls_, &affine_muls_, &real_weight_reads_}) c->store(0);
  }

 private:
  std::atomic<std::uint64_t> adds_{0}, shifts_{0}, flips_{0}, weight_muls_{0}, affine_muls_{0}, real_weight_reads_{0};
};

OpCounters& op_counters();

}  // namespace shiftnas::nn
