// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shiftnas/nn/counters.hpp"

namespace shiftnas::nn {

const char* to_string(Domain d) { return d == Domain::shift ? "shift" : "real"; }

Domain domain_from_string(const std::string& s) {
  if (s == "shift") return Domain::shift;
  if (s == "real") return Domain::real;
  throw std::invalid_argument("unknown domain '" + s + "' (expected shift or real)");
}

std::vector<shift::ShiftParam*> ParamRefs::shift_params() const {
  std::vector<shift::ShiftParam*> out;
  for (const auto& [_, p] : shift) out.push_back(p);
  return out;
}

std::vector<Parameter*> ParamRefs::real_params() const {
  std::vector<Parameter*> out;
  for (const auto& [_, p] : real) out.push_back(p);
  return out;
}

std::size_t ParamRefs::weight_count() const {
  std::size_t n = 0;
  for (const auto& [_, c] : convs) n += shape_numel(c->weight_shape());
  return n;
}

FixedTensor Module::infer(const FixedTensor&) const {
  throw std::logic_error("module has no fixed-point inference path");
}

std::string join_name(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

// ---------------------------------------------------------------------------

Conv2d::Conv2d(Domain domain, int in_channels, int out_channels, int kernel, ConvGeom geom, bool bias, Rng& rng)
    : domain_(domain), geom_(geom), has_bias_(bias) {
  if (in_channels % geom.groups || out_channels % geom.groups)
    throw std::invalid_argument("Conv2d: channels not divisible by groups");
  weight_shape_ = {out_channels, in_channels / geom.groups, kernel, kernel};
  const double fan_in = static_cast<double>(in_channels / geom.groups) * kernel * kernel;
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  Tensor w(weight_shape_);
  for (double& v : w.data) v = dist(rng);
  if (domain == Domain::shift)
    shift_w_ = shift::init_from_real(w);
  else
    real_w_ = Parameter(std::move(w));
  if (bias) bias_ = Parameter(Tensor({out_channels}));
}

Var Conv2d::forward(const Var& x, const Context& ctx) {
  op_counters().add({.real_weight_reads = 1});
  if (domain_ == Domain::shift) {
    if (shift_w_.numel() == 0) throw std::logic_error("Conv2d: no trainable weights loaded (inference-only layer)");
    return shift_conv2d(x, shift_w_, bias(), geom_, ctx.shift);
  }
  return conv2d(x, real_w_, bias(), geom_);
}

FixedTensor Conv2d::infer(const FixedTensor& x) const {
  if (domain_ != Domain::shift) throw std::logic_error("Conv2d: real-valued layer has no fixed path");
  if (!view_) throw std::logic_error("Conv2d: no quantized weights installed for fixed inference");
  std::vector<fxp::Fixed> bf;
  if (has_bias_)
    for (double b : bias_.value.data) bf.push_back(fxp::Fixed::from_real(b));
  return conv2d_shift(x, *view_, has_bias_ ? &bf : nullptr, geom_);
}

void Conv2d::collect(ParamRefs& out, const std::string& prefix) {
  if (domain_ == Domain::shift)
    out.shift.emplace_back(join_name(prefix, "weight"), &shift_w_);
  else
    out.real.emplace_back(join_name(prefix, "weight"), &real_w_);
  if (has_bias_) out.real.emplace_back(join_name(prefix, "bias"), &bias_);
  out.convs.emplace_back(prefix, this);
}

void Conv2d::freeze() {
  if (domain_ != Domain::shift) return;
  op_counters().add({.real_weight_reads = 1});
  view_ = shift::quantize(shift_w_);
}

void Conv2d::set_view(shift::QuantizedView view) {
  if (view.shape != weight_shape_)
    throw std::invalid_argument("Conv2d: stored weight shape " + shape_str(view.shape) + " does not match " +
                                shape_str(weight_shape_));
  view_ = std::move(view);
}

// ---------------------------------------------------------------------------

BatchNorm2d::BatchNorm2d(int channels, bool affine) : channels_(channels), affine_(affine), state_(channels) {
  if (affine) {
    gamma_ = Parameter(Tensor({channels}, 1.0));
    beta_ = Parameter(Tensor({channels}, 0.0));
  }
}

Var BatchNorm2d::forward(const Var& x, const Context& ctx) {
  return batch_norm(x, affine_ ? &gamma_ : nullptr, affine_ ? &beta_ : nullptr, state_, ctx.training);
}

FixedTensor BatchNorm2d::infer(const FixedTensor& x) const {
  const int N = x.dim(0), C = x.dim(1);
  if (C != channels_) throw std::invalid_argument("BatchNorm2d: channel mismatch");
  const std::size_t HW = x.numel() / (static_cast<std::size_t>(N) * C);
  std::vector<fxp::Fixed> a(C), c(C);
  for (int ch = 0; ch < C; ++ch) {
    const double ga = affine_ ? gamma_.value[ch] : 1.0, be = affine_ ? beta_.value[ch] : 0.0;
    const double scale = ga / std::sqrt(state_.running_var[ch] + state_.eps);
    a[ch] = fxp::Fixed::from_real(scale);
    c[ch] = fxp::Fixed::from_real(be - state_.running_mean[ch] * scale);
  }
  FixedTensor y(x.shape);
  for (int n = 0; n < N; ++n)
    for (int ch = 0; ch < C; ++ch) {
      const std::size_t off = (static_cast<std::size_t>(n) * C + ch) * HW;
      for (std::size_t l = 0; l < HW; ++l)
        y.data[off + l] = fxp::narrow_wide(std::int64_t{x.data[off + l].raw()} * a[ch].raw()) + c[ch];
    }
  op_counters().add({.adds = x.numel(), .affine_muls = x.numel()});
  return y;
}

void BatchNorm2d::collect(ParamRefs& out, const std::string& prefix) {
  if (affine_) {
    out.real.emplace_back(join_name(prefix, "gamma"), &gamma_);
    out.real.emplace_back(join_name(prefix, "beta"), &beta_);
  }
  out.buffers.emplace_back(join_name(prefix, "running_mean"), &state_.running_mean);
  out.buffers.emplace_back(join_name(prefix, "running_var"), &state_.running_var);
}

// ---------------------------------------------------------------------------

FixedTensor ReLU::infer(const FixedTensor& x) const {
  FixedTensor y(x.shape);
  for (std::size_t i = 0; i < x.numel(); ++i) y.data[i] = std::max(x.data[i], fxp::Fixed{});
  return y;
}

FixedTensor Subsample::infer(const FixedTensor& x) const {
  if (stride_ == 1) return x;
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int OH = (H + stride_ - 1) / stride_, OW = (W + stride_ - 1) / stride_;
  FixedTensor y({N, C, OH, OW});
  for (int nc = 0; nc < N * C; ++nc)
    for (int oh = 0; oh < OH; ++oh)
      for (int ow = 0; ow < OW; ++ow)
        y.data[(static_cast<std::size_t>(nc) * OH + oh) * OW + ow] =
            x.data[(static_cast<std::size_t>(nc) * H + oh * stride_) * W + ow * stride_];
  return y;
}

namespace {
Shape strided_shape(const Shape& s, int stride) {
  if (s.size() != 4) throw std::invalid_argument("expected NCHW shape, got " + shape_str(s));
  return {s[0], s[1], (s[2] + stride - 1) / stride, (s[3] + stride - 1) / stride};
}

// a / b rounded to nearest, ties away from zero; b > 0.
std::int64_t div_round(std::int64_t a, std::int64_t b) {
  return a >= 0 ? (a + b / 2) / b : -((-a + b / 2) / b);
}
}  // namespace

Var Zero::forward(const Var& x, const Context&) { return zeros(strided_shape(x->value.shape, stride_)); }

FixedTensor Zero::infer(const FixedTensor& x) const { return FixedTensor(strided_shape(x.shape, stride_)); }

Var Pool3x3::forward(const Var& x, const Context&) {
  return is_max_ ? max_pool3x3(x, stride_) : avg_pool3x3(x, stride_);
}

FixedTensor Pool3x3::infer(const FixedTensor& x) const {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int OH = (H - 1) / stride_ + 1, OW = (W - 1) / stride_ + 1;
  FixedTensor y({N, C, OH, OW});
  std::uint64_t adds = 0, divs = 0;
  for (int nc = 0; nc < N * C; ++nc)
    for (int oh = 0; oh < OH; ++oh)
      for (int ow = 0; ow < OW; ++ow) {
        fxp::Fixed best = fxp::Fixed::min();
        std::int64_t sum = 0, count = 0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            const int ih = oh * stride_ - 1 + i, iw = ow * stride_ - 1 + j;
            if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
            const fxp::Fixed v = x.data[(static_cast<std::size_t>(nc) * H + ih) * W + iw];
            best = std::max(best, v);
            sum += v.raw();
            ++count;
          }
        fxp::Fixed out = best;
        if (!is_max_) {
          out = fxp::Fixed::from_raw(fxp::saturate(div_round(sum, count)));
          adds += static_cast<std::uint64_t>(count);
          ++divs;
        }
        y.data[(static_cast<std::size_t>(nc) * OH + oh) * OW + ow] = out;
      }
  op_counters().add({.adds = adds, .affine_muls = divs});
  return y;
}

// ---------------------------------------------------------------------------

Sequential& Sequential::add(std::string name, ModulePtr m) {
  layers_.emplace_back(std::move(name), std::move(m));
  return *this;
}

Var Sequential::forward(const Var& x, const Context& ctx) {
  Var h = x;
  for (auto& [_, m] : layers_) h = m->forward(h, ctx);
  return h;
}

FixedTensor Sequential::infer(const FixedTensor& x) const {
  FixedTensor h = x;
  for (const auto& [_, m] : layers_) h = m->infer(h);
  return h;
}

void Sequential::collect(ParamRefs& out, const std::string& prefix) {
  for (auto& [name, m] : layers_) m->collect(out, join_name(prefix, name));
}

ModulePtr make_relu_conv_bn(Domain d, int c_in, int c_out, int kernel, int stride, int pad, bool affine, Rng& rng) {
  auto seq = std::make_unique<Sequential>();
  seq->add("relu", std::make_unique<ReLU>())
      .add("conv", std::make_unique<Conv2d>(d, c_in, c_out, kernel, ConvGeom{stride, pad, 1, 1}, false, rng))
      .add("bn", std::make_unique<BatchNorm2d>(c_out, affine));
  return seq;
}

ModulePtr make_sep_conv(Domain d, int channels, int kernel, int stride, bool affine, Rng& rng) {
  if (kernel != 3 && kernel != 5) throw std::invalid_argument("sep_conv: kernel must be 3 or 5");
  const int pad = kernel / 2;
  auto seq = std::make_unique<Sequential>();
  seq->add("relu1", std::make_unique<ReLU>())
      .add("dw1", std::make_unique<Conv2d>(d, channels, channels, kernel, ConvGeom{stride, pad, 1, channels}, false, rng))
      .add("pw1", std::make_unique<Conv2d>(d, channels, channels, 1, ConvGeom{}, false, rng))
      .add("bn1", std::make_unique<BatchNorm2d>(channels, affine))
      .add("relu2", std::make_unique<ReLU>())
      .add("dw2", std::make_unique<Conv2d>(d, channels, channels, kernel, ConvGeom{1, pad, 1, channels}, false, rng))
      .add("pw2", std::make_unique<Conv2d>(d, channels, channels, 1, ConvGeom{}, false, rng))
      .add("bn2", std::make_unique<BatchNorm2d>(channels, affine));
  return seq;
}

ModulePtr make_dil_conv(Domain d, int channels, int kernel, int stride, bool affine, Rng& rng) {
  if (kernel != 3 && kernel != 5) throw std::invalid_argument("dil_conv: kernel must be 3 or 5");
  constexpr int dilation = 2;
  const int pad = dilation * (kernel - 1) / 2;
  auto seq = std::make_unique<Sequential>();
  seq->add("relu", std::make_unique<ReLU>())
      .add("dw", std::make_unique<Conv2d>(d, channels, channels, kernel, ConvGeom{stride, pad, dilation, channels}, false,
                                          rng))
      .add("pw", std::make_unique<Conv2d>(d, channels, channels, 1, ConvGeom{}, false, rng))
      .add("bn", std::make_unique<BatchNorm2d>(channels, affine));
  return seq;
}

FactorizedReduce::FactorizedReduce(Domain d, int c_in, int c_out, bool affine, Rng& rng)
    : conv1_(d, c_in, c_out / 2, 1, ConvGeom{2, 0, 1, 1}, false, rng),
      conv2_(d, c_in, c_out - c_out / 2, 1, ConvGeom{2, 0, 1, 1}, false, rng),
      bn_(c_out, affine) {}

Var FactorizedReduce::forward(const Var& x, const Context& ctx) {
  Var h = relu(x);
  return bn_.forward(concat_channels({conv1_.forward(h, ctx), conv2_.forward(shift_crop(h), ctx)}), ctx);
}

FixedTensor FactorizedReduce::infer(const FixedTensor& x) const {
  const FixedTensor h = ReLU{}.infer(x);
  const int N = h.dim(0), C = h.dim(1), H = h.dim(2), W = h.dim(3);
  FixedTensor shifted(h.shape);
  for (int nc = 0; nc < N * C; ++nc)
    for (int r = 0; r + 1 < H; ++r)
      for (int c = 0; c + 1 < W; ++c)
        shifted.data[(static_cast<std::size_t>(nc) * H + r) * W + c] = h.data[(static_cast<std::size_t>(nc) * H + r + 1) * W + c + 1];
  return bn_.infer(fixed_concat_channels({conv1_.infer(h), conv2_.infer(shifted)}));
}

void FactorizedReduce::collect(ParamRefs& out, const std::string& prefix) {
  conv1_.collect(out, join_name(prefix, "conv1"));
  conv2_.collect(out, join_name(prefix, "conv2"));
  bn_.collect(out, join_name(prefix, "bn"));
}

// ---------------------------------------------------------------------------

FixedTensor fixed_add(const FixedTensor& a, const FixedTensor& b) {
  if (a.shape != b.shape) throw std::invalid_argument("fixed_add: shape mismatch");
  FixedTensor y(a.shape);
  for (std::size_t i = 0; i < a.numel(); ++i) y.data[i] = a.data[i] + b.data[i];
  op_counters().add({.adds = a.numel()});
  return y;
}

FixedTensor fixed_concat_channels(const std::vector<FixedTensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("fixed_concat_channels: no inputs");
  const Shape& s0 = xs[0].shape;
  int C = 0;
  for (const auto& x : xs) {
    if (x.shape.size() != 4 || x.shape[0] != s0[0] || x.shape[2] != s0[2] || x.shape[3] != s0[3])
      throw std::invalid_argument("fixed_concat_channels: incompatible shapes");
    C += x.shape[1];
  }
  const std::size_t HW = static_cast<std::size_t>(s0[2]) * s0[3];
  FixedTensor y({s0[0], C, s0[2], s0[3]});
  for (int n = 0; n < s0[0]; ++n) {
    std::size_t off = static_cast<std::size_t>(n) * C * HW;
    for (const auto& x : xs) {
      const std::size_t block = x.shape[1] * HW;
      std::copy_n(x.data.data() + n * block, block, y.data.data() + off);
      off += block;
    }
  }
  return y;
}

FixedTensor fixed_global_avg_pool(const FixedTensor& x) {
  const int N = x.dim(0), C = x.dim(1);
  const std::size_t HW = x.numel() / (static_cast<std::size_t>(N) * C);
  FixedTensor y({N, C, 1, 1});
  for (std::size_t i = 0; i < y.numel(); ++i) {
    std::int64_t s = 0;
    for (std::size_t l = 0; l < HW; ++l) s += x.data[i * HW + l].raw();
    y.data[i] = fxp::Fixed::from_raw(fxp::saturate(div_round(s, static_cast<std::int64_t>(HW))));
  }
  op_counters().add({.adds = x.numel(), .affine_muls = y.numel()});
  return y;
}

void freeze_all(Module& m) {
  ParamRefs refs;
  m.collect(refs, "");
  for (auto& [_, c] : refs.convs) c->freeze();
}

}  // namespace shiftnas::nn
