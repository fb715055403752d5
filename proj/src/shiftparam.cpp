// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/shiftparam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace shiftnas::shift {

SteRule default_ste_rule() {
#ifdef SHIFTNAS_ANALYTIC_STE
  return SteRule::analytic;
#else
  return SteRule::paper;
#endif
}

int round_half_away(double x) { return static_cast<int>(std::round(x)); }

fxp::Sign ternary_sign(double s) {
  if (s <= -0.5) return fxp::Sign::neg;
  if (s >= 0.5) return fxp::Sign::pos;
  return fxp::Sign::zero;
}

ShiftParam::ShiftParam(Tensor p, Tensor s) : P(std::move(p)), S(std::move(s)) {
  require_same_shape(P.value, S.value, "ShiftParam");
}

void ShiftParam::zero_grad() {
  P.zero_grad();
  S.zero_grad();
}

void ShiftParam::clamp() {
  for (double& p : P.value.data) p = std::clamp(p, double(fxp::kMinShift), double(fxp::kMaxShift));
  for (double& s : S.value.data) s = std::clamp(s, -kSignLogitBound, kSignLogitBound);
}

QuantizedView make_view(Shape shape, std::vector<std::int8_t> shift, std::vector<fxp::Sign> sign) {
  QuantizedView v;
  v.shape = std::move(shape);
  v.shift = std::move(shift);
  v.sign = std::move(sign);
  if (v.shift.size() != shape_numel(v.shape) || v.sign.size() != v.shift.size())
    throw std::invalid_argument("make_view: element count does not match shape " + shape_str(v.shape));
  v.weight.resize(v.shift.size());
  for (std::size_t i = 0; i < v.shift.size(); ++i) {
    const int p = v.shift[i];
    if (p < fxp::kMinShift || p > fxp::kMaxShift) throw std::out_of_range("make_view: shift outside [-15, 0]");
    v.weight[i] = fxp::to_int(v.sign[i]) * std::ldexp(1.0, p);
  }
  return v;
}

QuantizedView quantize(const ShiftParam& param) {
  const std::size_t n = param.numel();
  std::vector<std::int8_t> shift(n);
  std::vector<fxp::Sign> sign(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int p = std::clamp(round_half_away(param.P.value[i]), fxp::kMinShift, fxp::kMaxShift);
    shift[i] = static_cast<std::int8_t>(p);
    sign[i] = ternary_sign(static_cast<double>(round_half_away(param.S.value[i])));
  }
  return make_view(param.shape(), std::move(shift), std::move(sign));
}

Tensor grad_P_from_dw(const Tensor& dL_dw, const QuantizedView& view, SteRule rule) {
  if (dL_dw.shape != view.shape) throw std::invalid_argument("grad_P: shape mismatch with parameter");
  Tensor out(dL_dw.shape);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const double w = view.weight[i];
    if (rule == SteRule::paper)
      out[i] = dL_dw[i] * w * std::ldexp(1.0, view.shift[i]) * std::numbers::ln2;
    else
      out[i] = dL_dw[i] * w * std::numbers::ln2;
  }
  return out;
}

Tensor grad_S_from_dw(const Tensor& dL_dw, const QuantizedView& view, SteRule rule) {
  if (dL_dw.shape != view.shape) throw std::invalid_argument("grad_S: shape mismatch with parameter");
  if (rule == SteRule::paper) return dL_dw;
  Tensor out(dL_dw.shape);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = dL_dw[i] * std::ldexp(1.0, view.shift[i]);
  return out;
}

Tensor grad_P(const Tensor& upstream, const Tensor& dY_dw, const QuantizedView& view) {
  require_same_shape(upstream, dY_dw, "grad_P");
  Tensor g(upstream.shape);
  for (std::size_t i = 0; i < g.numel(); ++i) g[i] = upstream[i] * dY_dw[i];
  return grad_P_from_dw(g, view, SteRule::paper);
}

Tensor grad_S(const Tensor& upstream, const Tensor& dY_dw) {
  require_same_shape(upstream, dY_dw, "grad_S");
  Tensor g(upstream.shape);
  for (std::size_t i = 0; i < g.numel(); ++i) g[i] = upstream[i] * dY_dw[i];
  return g;
}

ShiftParam init_from_real(const Tensor& w_real) {
  Tensor p(w_real.shape), s(w_real.shape);
  const double floor_mag = std::ldexp(1.0, fxp::kMinShift);
  for (std::size_t i = 0; i < w_real.numel(); ++i) {
    const double w = w_real[i];
    p[i] = std::clamp(std::log2(std::max(std::abs(w), floor_mag)), double(fxp::kMinShift), double(fxp::kMaxShift));
    s[i] = w > kZeroEpsilon ? 1.0 : (w < -kZeroEpsilon ? -1.0 : 0.0);
  }
  return ShiftParam(std::move(p), std::move(s));
}

Tensor surrogate_weight(const ShiftParam& param) {
  Tensor w(param.shape());
  for (std::size_t i = 0; i < w.numel(); ++i) w[i] = param.S.value[i] * std::exp2(param.P.value[i]);
  return w;
}

std::uint8_t encode_weight(int shift, fxp::Sign sign) {
  if (shift < fxp::kMinShift || shift > fxp::kMaxShift) throw std::out_of_range("encode_weight: shift outside [-15, 0]");
  if (sign == fxp::Sign::zero) return kZeroCode;
  int m = -shift;
  if (m == 15 && sign == fxp::Sign::pos) m = 14;
  return static_cast<std::uint8_t>(m | (sign == fxp::Sign::neg ? 0x10 : 0));
}

void decode_weight(std::uint8_t code, int& shift, fxp::Sign& sign) {
  if (code > 0x1F) throw std::invalid_argument("decode_weight: code wider than 5 bits");
  if (code == kZeroCode) {
    shift = fxp::kMinShift;
    sign = fxp::Sign::zero;
    return;
  }
  shift = -static_cast<int>(code & 0x0F);
  sign = (code & 0x10) ? fxp::Sign::neg : fxp::Sign::pos;
}

double code_value(std::uint8_t code) {
  int p;
  fxp::Sign s;
  decode_weight(code, p, s);
  return fxp::to_int(s) * std::ldexp(1.0, p);
}

std::size_t packed_bytes(std::size_t count) { return (count * kBitsPerWeight + 7) / 8; }

std::vector<std::uint8_t> pack_codes(std::span<const std::uint8_t> codes) {
  std::vector<std::uint8_t> out(packed_bytes(codes.size()), 0);
  std::size_t bit = 0;
  for (std::uint8_t c : codes) {
    for (int b = 0; b < kBitsPerWeight; ++b, ++bit)
      if (c & (1u << b)) out[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
  }
  return out;
}

std::vector<std::uint8_t> unpack_codes(std::span<const std::uint8_t> bytes, std::size_t count) {
  if (bytes.size() < packed_bytes(count))
    throw std::invalid_argument("unpack_codes: " + std::to_string(bytes.size()) + " bytes cannot hold " +
                                std::to_string(count) + " codes");
  std::vector<std::uint8_t> codes(count, 0);
  std::size_t bit = 0;
  for (std::size_t i = 0; i < count; ++i)
    for (int b = 0; b < kBitsPerWeight; ++b, ++bit)
      if (bytes[bit / 8] & (1u << (bit % 8))) codes[i] |= static_cast<std::uint8_t>(1u << b);
  return codes;
}

std::vector<std::uint8_t> encode_view(const QuantizedView& view) {
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(view.shape.size()));
  for (int d : view.shape)
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>((static_cast<std::uint32_t>(d) >> (8 * b)) & 0xFF));
  std::vector<std::uint8_t> codes(view.numel());
  for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = encode_weight(view.shift[i], view.sign[i]);
  const auto packed = pack_codes(codes);
  out.insert(out.end(), packed.begin(), packed.end());
  return out;
}

QuantizedView decode_view(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw std::invalid_argument("decode_view: empty buffer");
  const std::size_t rank = bytes[0];
  if (bytes.size() < 1 + 4 * rank) throw std::invalid_argument("decode_view: truncated shape header");
  Shape shape(rank);
  for (std::size_t r = 0; r < rank; ++r) {
    std::uint32_t d = 0;
    for (int b = 0; b < 4; ++b) d |= std::uint32_t{bytes[1 + 4 * r + b]} << (8 * b);
    shape[r] = static_cast<int>(d);
  }
  const std::size_t n = shape_numel(shape);
  const auto codes = unpack_codes(bytes.subspan(1 + 4 * rank), n);
  std::vector<std::int8_t> shift(n);
  std::vector<fxp::Sign> sign(n);
  for (std::size_t i = 0; i < n; ++i) {
    int p;
    decode_weight(codes[i], p, sign[i]);
    shift[i] = static_cast<std::int8_t>(p);
  }
  return make_view(std::move(shape), std::move(shift), std::move(sign));
}

}  // namespace shiftnas::shift
