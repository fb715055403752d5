// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "shiftnas/fxp.hpp"

using namespace shiftnas::fxp;

namespace {
// Independent reference: exact rational value rounded half away from zero.
std::int64_t ref_round_div_pow2(std::int64_t v, int k) {
  const long double q = static_cast<long double>(v) / std::ldexp(1.0L, k);
  return static_cast<std::int64_t>(q < 0 ? -std::floor(-q + 0.5L) : std::floor(q + 0.5L));
}
}  // namespace

TEST_CASE("from_real scaling and saturation") {
  CHECK(Fixed::from_real(1.0).raw() == 0x00010000);
  CHECK(Fixed::from_real(std::ldexp(1.0, -16)).raw() == 1);
  CHECK(Fixed::from_real(40000.0).raw() == 0x7FFFFFFF);
  CHECK(Fixed::from_real(-40000.0).raw() == INT32_MIN);
  CHECK(Fixed::from_real(-32768.0).raw() == INT32_MIN);
  // ties away from zero
  CHECK(Fixed::from_real(1.5 * kUlp).raw() == 2);
  CHECK(Fixed::from_real(-1.5 * kUlp).raw() == -2);
  CHECK(Fixed::from_real(0.49 * kUlp).raw() == 0);
}

TEST_CASE("from_real rejects non-finite input") {
  CHECK_THROWS_AS(Fixed::from_real(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
  CHECK_THROWS_AS(Fixed::from_real(std::numeric_limits<double>::infinity()), std::domain_error);
  CHECK_THROWS_AS(Fixed::from_real(-std::numeric_limits<double>::infinity()), std::domain_error);
}

TEST_CASE("round trip stays within one ulp") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-32767.0, 32767.0);
  for (int i = 0; i < 20000; ++i) {
    const double x = d(rng);
    CHECK(std::abs(Fixed::from_real(x).to_real() - x) <= kUlp);
  }
}

TEST_CASE("shift_mul examples") {
  const Fixed six = Fixed::from_real(6.0);
  CHECK(shift_mul(six, -1, Sign::pos).to_real() == 3.0);
  CHECK(shift_mul(six, 0, Sign::neg).to_real() == -6.0);
  CHECK(shift_mul(Fixed::from_real(123.456), -3, Sign::zero).raw() == 0);
  CHECK(shift_mul(six, 0, Sign::pos) == six);
  CHECK_THROWS_AS(shift_mul(six, 1, Sign::pos), std::out_of_range);
  CHECK_THROWS_AS(shift_mul(six, -16, Sign::pos), std::out_of_range);
}

TEST_CASE("flip examples and involution") {
  CHECK(flip(Fixed::from_real(5.0), Sign::neg).to_real() == -5.0);
  CHECK(flip(Fixed::from_real(5.0), Sign::zero).to_real() == 0.0);
  CHECK(flip(Fixed::from_real(-3.25), Sign::pos).to_real() == -3.25);
  std::mt19937 rng(3);
  std::uniform_int_distribution<std::int32_t> raw(INT32_MIN + 1, INT32_MAX);
  for (int i = 0; i < 1000; ++i) {
    const Fixed x = Fixed::from_raw(raw(rng));
    CHECK(flip(flip(x, Sign::neg), Sign::neg) == x);
    CHECK(flip(flip(x, Sign::pos), Sign::pos) == x);
  }
}

TEST_CASE("to_sign validates") {
  CHECK(to_sign(-1) == Sign::neg);
  CHECK(to_sign(0) == Sign::zero);
  CHECK(to_sign(1) == Sign::pos);
  CHECK_THROWS_AS(to_sign(2), std::invalid_argument);
}

TEST_CASE("round_shift_right matches an exact reference") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> v(-(std::int64_t{1} << 47), std::int64_t{1} << 47);
  for (int i = 0; i < 20000; ++i) {
    const std::int64_t x = v(rng);
    const int k = static_cast<int>(rng() % 32);
    CHECK(round_shift_right(x, k) == ref_round_div_pow2(x, k));
  }
  CHECK(round_shift_right(3, 1) == 2);
  CHECK(round_shift_right(-3, 1) == -2);
  CHECK(round_shift_right(1, 1) == 1);
  CHECK(round_shift_right(-1, 1) == -1);
}

TEST_CASE("addition saturates like a clamped wide sum") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::int32_t> raw(INT32_MIN, INT32_MAX);
  for (int i = 0; i < 20000; ++i) {
    const std::int32_t a = raw(rng), b = raw(rng), c = raw(rng);
    const std::int64_t wide = std::int64_t{a} + b;
    const std::int64_t clamped = std::min<std::int64_t>(INT32_MAX, std::max<std::int64_t>(INT32_MIN, wide));
    CHECK((Fixed::from_raw(a) + Fixed::from_raw(b)).raw() == clamped);
    // associativity wherever no partial sum saturates
    const std::int64_t ab = std::int64_t{a} + b, bc = std::int64_t{b} + c, abc = ab + c;
    auto in_range = [](std::int64_t x) { return x >= INT32_MIN && x <= INT32_MAX; };
    if (in_range(ab) && in_range(bc) && in_range(abc))
      CHECK(((Fixed::from_raw(a) + Fixed::from_raw(b)) + Fixed::from_raw(c)) ==
            (Fixed::from_raw(a) + (Fixed::from_raw(b) + Fixed::from_raw(c))));
  }
  CHECK((-Fixed::min()).raw() == INT32_MAX);
}

TEST_CASE("wide accumulator rounds once") {
  // 3 * (1 ulp >> 1) = 1.5 ulp -> 2 ulp; per-term rounding would give 3 ulp.
  WideAccumulator acc;
  for (int i = 0; i < 3; ++i) acc.add_shifted(Fixed::from_raw(1), -1, Sign::pos);
  CHECK(acc.result().raw() == 2);
  WideAccumulator neg;
  neg.add_shifted(Fixed::from_raw(5), -2, Sign::neg);
  neg.add(Fixed::from_raw(1));
  CHECK(neg.result().raw() == ref_round_div_pow2(-5 * (1 << 14) + (1 << 16), 16));
}
