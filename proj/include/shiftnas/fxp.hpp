// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>

// Q16.16 fixed-point core.
//
// A Fixed holds a signed 32-bit raw word interpreted as value * 2^16, so the
// representable range is [-2^15, 2^15 - 2^-16] with a step of 2^-16.
// All arithmetic saturates at the range ends instead of wrapping, and every
// narrowing right shift rounds to nearest with ties away from zero.

namespace shiftnas::fxp {

inline constexpr int kFracBits = 16;
inline constexpr std::int32_t kOneRaw = std::int32_t{1} << kFracBits;
inline constexpr double kUlp = 1.0 / 65536.0;

// Shift exponents admitted by the 4-bit magnitude storage.
inline constexpr int kMinShift = -15;
inline constexpr int kMaxShift = 0;

enum class Sign : std::int8_t { neg = -1, zero = 0, pos = 1 };

// Throws std::invalid_argument unless s is -1, 0 or +1.
Sign to_sign(int s);
constexpr int to_int(Sign s) { return static_cast<int>(s); }

// Clamp a wide value into the int32 raw range.
constexpr std::int32_t saturate(std::int64_t v) {
  if (v > INT32_MAX) return INT32_MAX;
  if (v < INT32_MIN) return INT32_MIN;
  return static_cast<std::int32_t>(v);
}

// v / 2^k rounded to nearest, ties away from zero. k in [0, 62].
constexpr std::int64_t round_shift_right(std::int64_t v, int k) {
  if (k <= 0) return v;
  const std::int64_t half = std::int64_t{1} << (k - 1);
  if (v >= 0) return (v + half) >> k;
  return -((-v + half) >> k);
}

class Fixed {
 public:
  constexpr Fixed() = default;

  static constexpr Fixed from_raw(std::int32_t raw) {
    Fixed f;
    f.raw_ = raw;
    return f;
  }
  // Nearest representable value, ties away from zero, saturating.
  // Throws std::domain_error for NaN or infinity.
  static Fixed from_real(double x);

  static constexpr Fixed max() { return from_raw(INT32_MAX); }
  static constexpr Fixed min() { return from_raw(INT32_MIN); }
  static constexpr Fixed one() { return from_raw(kOneRaw); }

  constexpr std::int32_t raw() const { return raw_; }
  constexpr double to_real() const { return static_cast<double>(raw_) * kUlp; }

  friend constexpr Fixed operator+(Fixed a, Fixed b) {
    return from_raw(saturate(std::int64_t{a.raw_} + b.raw_));
  }
  friend constexpr Fixed operator-(Fixed a, Fixed b) {
    return from_raw(saturate(std::int64_t{a.raw_} - b.raw_));
  }
  friend constexpr Fixed operator-(Fixed a) { return from_raw(saturate(-std::int64_t{a.raw_})); }
  Fixed& operator+=(Fixed o) { return *this = *this + o; }

  friend constexpr auto operator<=>(Fixed, Fixed) = default;

 private:
  std::int32_t raw_ = 0;
};

// Sign flip: -x, 0 or x.
constexpr Fixed flip(Fixed x, Sign s) {
  switch (s) {
    case Sign::neg: return -x;
    case Sign::zero: return Fixed{};
    case Sign::pos: return x;
  }
  return Fixed{};
}

// flip(x >> |p|, s). Throws std::out_of_range for p outside [-15, 0].
Fixed shift_mul(Fixed x, int p, Sign s);

// Dot-product accumulator carrying 32 fraction bits in 64 bits. A shifted
// term x * 2^p with p in [-15, 0] is exact at this width, so rounding only
// happens once, in result().
class WideAccumulator {
 public:
  void add(Fixed x) { acc_ += std::int64_t{x.raw()} << kFracBits; }
  void add_shifted(Fixed x, int p, Sign s) {
    const std::int64_t term = (std::int64_t{x.raw()} << kFracBits) >> -p;
    if (s == Sign::pos) acc_ += term;
    else if (s == Sign::neg) acc_ -= term;
  }
  std::int64_t wide() const { return acc_; }
  Fixed result() const { return Fixed::from_raw(saturate(round_shift_right(acc_, kFracBits))); }

 private:
  std::int64_t acc_ = 0;
};

// Narrow a 32-fraction-bit accumulator value to Q16.16.
constexpr Fixed narrow_wide(std::int64_t wide) {
  return Fixed::from_raw(saturate(round_shift_right(wide, kFracBits)));
}

}  // namespace shiftnas::fxp
