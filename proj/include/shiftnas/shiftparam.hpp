// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shiftnas/fxp.hpp"
#include "shiftnas/tensor.hpp"

// Power-of-two weight parameterization.
//
// A weight tensor W is represented by a continuous shift tensor P and a
// continuous sign-logit tensor S. The forward pass uses the rounded view
//   Pq = round(P),  Sq = sign(round(S)),  w = flip(2^Pq, Sq)
// and the backward pass uses straight-through estimates for round and sign.

namespace shiftnas::shift {

inline constexpr double kSignLogitBound = 1.5;
inline constexpr double kZeroEpsilon = fxp::kUlp;  // |w| <= this initializes to sign 0

// Gradient formula used for P and S.
//   paper:    dL/dP = g * w * 2^Pq * ln2,  dL/dS = g
//   analytic: dL/dP = g * w * ln2,         dL/dS = g * 2^Pq
// where g = dL/dw. The default comes from the SHIFTNAS_ANALYTIC_STE build option.
enum class SteRule { paper, analytic };
SteRule default_ste_rule();

// round(), half away from zero.
int round_half_away(double x);

// -1 for s <= -0.5, 0 for -0.5 < s < 0.5, +1 for s >= 0.5.
fxp::Sign ternary_sign(double s);

struct ShiftParam {
  Parameter P;
  Parameter S;

  ShiftParam() = default;
  ShiftParam(Tensor p, Tensor s);

  const Shape& shape() const { return P.value.shape; }
  std::size_t numel() const { return P.value.numel(); }
  void zero_grad();
  // Projects P onto [-15, 0] and S onto [-1.5, 1.5].
  void clamp();
};

// Immutable rounded snapshot of a ShiftParam.
struct QuantizedView {
  Shape shape;
  std::vector<std::int8_t> shift;  // Pq in [-15, 0]
  std::vector<fxp::Sign> sign;     // Sq
  std::vector<double> weight;      // flip(2^Pq, Sq)

  std::size_t numel() const { return shift.size(); }
  Tensor weight_tensor() const { return Tensor(shape, weight); }
};

QuantizedView quantize(const ShiftParam& param);
// View built directly from integer shifts and signs (e.g. decoded storage).
QuantizedView make_view(Shape shape, std::vector<std::int8_t> shift, std::vector<fxp::Sign> sign);

// dL/dP for an elementwise weight gradient dL/dw.
Tensor grad_P_from_dw(const Tensor& dL_dw, const QuantizedView& view, SteRule rule = SteRule::paper);
Tensor grad_S_from_dw(const Tensor& dL_dw, const QuantizedView& view, SteRule rule = SteRule::paper);

// Elementwise forms with dL/dw = upstream * dY_dw. Throw on shape mismatch.
Tensor grad_P(const Tensor& upstream, const Tensor& dY_dw, const QuantizedView& view);
Tensor grad_S(const Tensor& upstream, const Tensor& dY_dw);

// P = clamp(log2(max(|w|, 2^-15)), -15, 0); S logit = +1, -1 or 0 using
// a zero threshold of 2^-16.
ShiftParam init_from_real(const Tensor& w_real);

// Continuous surrogate w = S * 2^P with no rounding, for gradient checks.
Tensor surrogate_weight(const ShiftParam& param);

// ---------------------------------------------------------------------------
// 5-bit storage
//
// code bits 0..3: magnitude index m = -Pq (0..15)
// code bit 4:     1 for a negative weight
// code 0x0F (m = 15, bit4 = 0) is reserved for a zero weight (Sq = 0).
// Because of that reservation +2^-15 has no code; it is stored as +2^-14,
// its nearest representable neighbour in the log domain.
// Codes are packed LSB-first: weight i occupies stream bits [5i, 5i+5).

inline constexpr int kBitsPerWeight = 5;
inline constexpr std::uint8_t kZeroCode = 0x0F;

std::uint8_t encode_weight(int shift, fxp::Sign sign);
void decode_weight(std::uint8_t code, int& shift, fxp::Sign& sign);
double code_value(std::uint8_t code);

std::vector<std::uint8_t> pack_codes(std::span<const std::uint8_t> codes);
std::vector<std::uint8_t> unpack_codes(std::span<const std::uint8_t> bytes, std::size_t count);

// Shape header (u8 rank, u32 LE dims) followed by the packed codes.
std::vector<std::uint8_t> encode_view(const QuantizedView& view);
QuantizedView decode_view(std::span<const std::uint8_t> bytes);
std::size_t packed_bytes(std::size_t count);

}  // namespace shiftnas::shift
