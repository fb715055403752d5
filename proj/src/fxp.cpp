// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/fxp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace shiftnas::fxp {

Sign to_sign(int s) {
  if (s < -1 || s > 1) throw std::invalid_argument("ternary sign must be -1, 0 or +1, got " + std::to_string(s));
  return static_cast<Sign>(s);
}

Fixed Fixed::from_real(double x) {
  if (!std::isfinite(x)) throw std::domain_error("Fixed::from_real: non-finite input");
  const double scaled = std::round(x * static_cast<double>(kOneRaw));  // half away from zero
  if (scaled >= static_cast<double>(INT32_MAX)) return max();
  if (scaled <= static_cast<double>(INT32_MIN)) return min();
  return from_raw(static_cast<std::int32_t>(scaled));
}

Fixed shift_mul(Fixed x, int p, Sign s) {
  if (p < kMinShift || p > kMaxShift)
    throw std::out_of_range("shift exponent " + std::to_string(p) + " outside [-15, 0]");
  if (s == Sign::zero) return Fixed{};
  const Fixed shifted = Fixed::from_raw(static_cast<std::int32_t>(round_shift_right(x.raw(), -p)));
  return flip(shifted, s);
}

}  // namespace shiftnas::fxp
