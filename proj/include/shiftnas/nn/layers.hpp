// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "shiftnas/nn/ops.hpp"

namespace shiftnas::nn {

using Rng = std::mt19937_64;

// Which numeric family holds the convolution weights.
enum class Domain { shift, real };
const char* to_string(Domain d);
Domain domain_from_string(const std::string& s);

struct Context {
  bool training = true;
  ShiftOptions shift;
};

// Named references into a module tree, in registration order.
struct ParamRefs {
  std::vector<std::pair<std::string, shift::ShiftParam*>> shift;
  std::vector<std::pair<std::string, Parameter*>> real;
  std::vector<std::pair<std::string, Tensor*>> buffers;
  std::vector<std::pair<std::string, class Conv2d*>> convs;

  std::vector<shift::ShiftParam*> shift_params() const;
  std::vector<Parameter*> real_params() const;
  std::size_t weight_count() const;  // shift + real-conv weight elements
};

class Module {
 public:
  virtual ~Module() = default;
  virtual Var forward(const Var& x, const Context& ctx) = 0;
  // Pure Q16.16 inference. Layers without a fixed path throw std::logic_error.
  virtual FixedTensor infer(const FixedTensor& x) const;
  virtual void collect(ParamRefs& /*out*/, const std::string& /*prefix*/) {}
};
using ModulePtr = std::unique_ptr<Module>;

std::string join_name(const std::string& prefix, const std::string& name);

class Conv2d final : public Module {
 public:
  Conv2d(Domain domain, int in_channels, int out_channels, int kernel, ConvGeom geom, bool bias, Rng& rng);

  Var forward(const Var& x, const Context& ctx) override;
  FixedTensor infer(const FixedTensor& x) const override;
  void collect(ParamRefs& out, const std::string& prefix) override;

  // Snapshot the rounded weights for the fixed path.
  void freeze();
  // Install stored weights for inference; the trainable tensors stay empty.
  void set_view(shift::QuantizedView view);
  bool has_view() const { return view_.has_value(); }
  const shift::QuantizedView& view() const { return *view_; }

  Domain domain() const { return domain_; }
  const ConvGeom& geom() const { return geom_; }
  Shape weight_shape() const { return weight_shape_; }
  shift::ShiftParam& shift_weight() { return shift_w_; }
  Parameter& real_weight() { return real_w_; }
  Parameter* bias() { return has_bias_ ? &bias_ : nullptr; }

 private:
  Domain domain_;
  ConvGeom geom_;
  Shape weight_shape_;
  shift::ShiftParam shift_w_;
  Parameter real_w_;
  bool has_bias_;
  Parameter bias_;
  std::optional<shift::QuantizedView> view_;
};

class BatchNorm2d final : public Module {
 public:
  BatchNorm2d(int channels, bool affine);
  Var forward(const Var& x, const Context& ctx) override;
  FixedTensor infer(const FixedTensor& x) const override;
  void collect(ParamRefs& out, const std::string& prefix) override;
  BnState& state() { return state_; }

 private:
  int channels_;
  bool affine_;
  Parameter gamma_, beta_;
  BnState state_;
};

class ReLU final : public Module {
 public:
  Var forward(const Var& x, const Context&) override { return relu(x); }
  FixedTensor infer(const FixedTensor& x) const override;
};

class Identity final : public Module {
 public:
  Var forward(const Var& x, const Context&) override { return x; }
  FixedTensor infer(const FixedTensor& x) const override { return x; }
};

// Weight-free stride-2 skip: keeps every other row and column.
class Subsample final : public Module {
 public:
  explicit Subsample(int stride) : stride_(stride) {}
  Var forward(const Var& x, const Context&) override { return subsample(x, stride_); }
  FixedTensor infer(const FixedTensor& x) const override;

 private:
  int stride_;
};

// "No connection": zeros of the (strided) output shape.
class Zero final : public Module {
 public:
  explicit Zero(int stride) : stride_(stride) {}
  Var forward(const Var& x, const Context&) override;
  FixedTensor infer(const FixedTensor& x) const override;

 private:
  int stride_;
};

class Pool3x3 final : public Module {
 public:
  Pool3x3(bool is_max, int stride) : is_max_(is_max), stride_(stride) {}
  Var forward(const Var& x, const Context&) override;
  FixedTensor infer(const FixedTensor& x) const override;

 private:
  bool is_max_;
  int stride_;
};

class Sequential final : public Module {
 public:
  Sequential() = default;
  Sequential& add(std::string name, ModulePtr m);
  Var forward(const Var& x, const Context& ctx) override;
  FixedTensor infer(const FixedTensor& x) const override;
  void collect(ParamRefs& out, const std::string& prefix) override;
  std::size_t size() const { return layers_.size(); }

 private:
  std::vector<std::pair<std::string, ModulePtr>> layers_;
};

// relu -> conv -> bn
ModulePtr make_relu_conv_bn(Domain d, int c_in, int c_out, int kernel, int stride, int pad, bool affine, Rng& rng);

// relu -> depthwise conv (k, stride) -> pointwise -> bn -> relu -> depthwise (k, 1) -> pointwise -> bn
ModulePtr make_sep_conv(Domain d, int channels, int kernel, int stride, bool affine, Rng& rng);

// relu -> depthwise conv (k, stride, dilation 2) -> pointwise -> bn
ModulePtr make_dil_conv(Domain d, int channels, int kernel, int stride, bool affine, Rng& rng);

// relu -> two stride-2 1x1 convs on x and on x shifted by one pixel -> concat -> bn
class FactorizedReduce final : public Module {
 public:
  FactorizedReduce(Domain d, int c_in, int c_out, bool affine, Rng& rng);
  Var forward(const Var& x, const Context& ctx) override;
  FixedTensor infer(const FixedTensor& x) const override;
  void collect(ParamRefs& out, const std::string& prefix) override;

 private:
  Conv2d conv1_, conv2_;
  BatchNorm2d bn_;
};

// Fixed-path helpers shared by cells and networks.
FixedTensor fixed_add(const FixedTensor& a, const FixedTensor& b);
FixedTensor fixed_concat_channels(const std::vector<FixedTensor>& xs);
FixedTensor fixed_global_avg_pool(const FixedTensor& x);  // -> [N, C, 1, 1]

// Freeze every convolution of a module tree.
void freeze_all(Module& m);

}  // namespace shiftnas::nn
