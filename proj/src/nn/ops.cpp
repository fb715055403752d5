// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "shiftnas/nn/counters.hpp"

namespace shiftnas::nn {

namespace {

bool needs(const Node& self, std::size_t i) { return self.parents[i] && self.parents[i]->requires_grad; }

void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < src.numel(); ++i) dst[i] += src[i];
}

void require_4d(const Tensor& t, const char* what) {
  if (t.rank() != 4) throw std::invalid_argument(std::string(what) + ": expected NCHW input, got " + shape_str(t.shape));
}

}  // namespace

void accumulate_grad(Parameter& p, const Tensor& g) {
  if (p.grad.shape != p.value.shape) p.zero_grad();
  require_same_shape(p.grad, g, "accumulate_grad");
  add_into(p.grad, g);
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a->value, b->value, "add");
  Tensor out = a->value;
  add_into(out, b->value);
  return make_node("add", std::move(out), {a, b}, [](Node& self) {
    for (std::size_t i = 0; i < 2; ++i)
      if (needs(self, i)) add_into(self.parents[i]->grad(), self.grad());
  });
}

Var add_n(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("add_n: no inputs");
  Tensor out = xs[0]->value;
  for (std::size_t k = 1; k < xs.size(); ++k) {
    require_same_shape(out, xs[k]->value, "add_n");
    add_into(out, xs[k]->value);
  }
  return make_node("add_n", std::move(out), xs, [](Node& self) {
    for (std::size_t i = 0; i < self.parents.size(); ++i)
      if (needs(self, i)) add_into(self.parents[i]->grad(), self.grad());
  });
}

Var scale(const Var& x, double s) {
  Tensor out = x->value;
  for (double& v : out.data) v *= s;
  return make_node("scale", std::move(out), {x}, [s](Node& self) {
    Tensor& gx = self.parents[0]->grad();
    const Tensor& g = self.grad();
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += s * g[i];
  });
}

Var weighted_sum(const std::vector<Var>& xs, const Var& weights) {
  if (xs.empty()) throw std::invalid_argument("weighted_sum: no inputs");
  if (weights->value.numel() != xs.size())
    throw std::invalid_argument("weighted_sum: " + std::to_string(weights->value.numel()) + " weights for " +
                                std::to_string(xs.size()) + " inputs");
  Tensor out(xs[0]->value.shape);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    require_same_shape(out, xs[k]->value, "weighted_sum (candidate outputs)");
    const double a = weights->value[k];
    const Tensor& v = xs[k]->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += a * v[i];
  }
  std::vector<Var> parents = xs;
  parents.push_back(weights);
  return make_node("weighted_sum", std::move(out), std::move(parents), [](Node& self) {
    const std::size_t k_count = self.parents.size() - 1;
    const Tensor& g = self.grad();
    const Var& w = self.parents.back();
    for (std::size_t k = 0; k < k_count; ++k) {
      const Var& x = self.parents[k];
      if (x->requires_grad) {
        const double a = w->value[k];
        Tensor& gx = x->grad();
        for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += a * g[i];
      }
      if (w->requires_grad) {
        double dot = 0.0;
        for (std::size_t i = 0; i < g.numel(); ++i) dot += g[i] * x->value[i];
        w->grad()[k] += dot;
      }
    }
  });
}

Var relu(const Var& x) {
  Tensor out = x->value;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return make_node("relu", std::move(out), {x}, [](Node& self) {
    const Tensor& xv = self.parents[0]->value;
    Tensor& gx = self.parents[0]->grad();
    const Tensor& g = self.grad();
    for (std::size_t i = 0; i < g.numel(); ++i)
      if (xv[i] > 0.0) gx[i] += g[i];
  });
}

namespace {

Tensor bias_grad(const Tensor& dy) {
  const int N = dy.dim(0), C = dy.dim(1);
  const std::size_t L = dy.numel() / (static_cast<std::size_t>(N) * C);
  Tensor db({C});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* p = dy.data.data() + (static_cast<std::size_t>(n) * C + c) * L;
      double s = 0.0;
      for (std::size_t l = 0; l < L; ++l) s += p[l];
      db[c] += s;
    }
  return db;
}

}  // namespace

Var conv2d(const Var& x, Parameter& w, Parameter* bias, const ConvGeom& g) {
  require_4d(x->value, "conv2d");
  op_counters().add({.real_weight_reads = 1});
  Tensor y = conv2d_real(x->value, w.value, bias ? &bias->value : nullptr, g);
  Parameter* wp = &w;
  return make_node(
      "conv2d", std::move(y), {x},
      [wp, bias, g](Node& self) {
        const Var& xin = self.parents[0];
        Tensor dx, dw;
        conv2d_real_backward(xin->value, wp->value, self.grad(), g, xin->requires_grad ? &dx : nullptr, &dw);
        if (xin->requires_grad) add_into(xin->grad(), dx);
        accumulate_grad(*wp, dw);
        if (bias) accumulate_grad(*bias, bias_grad(self.grad()));
      },
      true);
}

Var shift_conv2d(const Var& x, shift::ShiftParam& w, Parameter* bias, const ConvGeom& g, const ShiftOptions& opt) {
  require_4d(x->value, "shift_conv2d");
  op_counters().add({.real_weight_reads = 1});
  shift::ShiftParam* wp = &w;

  if (opt.mode == WeightMode::surrogate) {
    Tensor wr = shift::surrogate_weight(w);
    Tensor y = conv2d_real(x->value, wr, bias ? &bias->value : nullptr, g);
    return make_node(
        "shift_conv2d_surrogate", std::move(y), {x},
        [wp, bias, g, wr](Node& self) {
          const Var& xin = self.parents[0];
          Tensor dx, dw;
          conv2d_real_backward(xin->value, wr, self.grad(), g, xin->requires_grad ? &dx : nullptr, &dw);
          if (xin->requires_grad) add_into(xin->grad(), dx);
          Tensor dP(dw.shape), dS(dw.shape);
          for (std::size_t i = 0; i < dw.numel(); ++i) {
            const double two_p = std::exp2(wp->P.value[i]);
            dP[i] = dw[i] * wr[i] * std::numbers::ln2;
            dS[i] = dw[i] * two_p;
          }
          accumulate_grad(wp->P, dP);
          accumulate_grad(wp->S, dS);
          if (bias) accumulate_grad(*bias, bias_grad(self.grad()));
        },
        true);
  }

  shift::QuantizedView view = shift::quantize(w);
  FixedTensor xf = to_fixed(x->value);
  std::vector<fxp::Fixed> bf;
  if (bias)
    for (double b : bias->value.data) bf.push_back(fxp::Fixed::from_real(b));
  Tensor y = to_real(conv2d_shift(xf, view, bias ? &bf : nullptr, g));
  Tensor x_rounded = to_real(xf);
  const shift::SteRule rule = opt.rule;
  return make_node(
      "shift_conv2d", std::move(y), {x},
      [wp, bias, g, view = std::move(view), x_rounded = std::move(x_rounded), rule](Node& self) {
        const Var& xin = self.parents[0];
        Tensor dx, dw;
        conv2d_real_backward(x_rounded, view.weight_tensor(), self.grad(), g, xin->requires_grad ? &dx : nullptr, &dw);
        if (xin->requires_grad) add_into(xin->grad(), dx);
        accumulate_grad(wp->P, shift::grad_P_from_dw(dw, view, rule));
        accumulate_grad(wp->S, shift::grad_S_from_dw(dw, view, rule));
        if (bias) accumulate_grad(*bias, bias_grad(self.grad()));
      },
      true);
}

Var batch_norm(const Var& x, Parameter* gamma, Parameter* beta, BnState& state, bool training) {
  require_4d(x->value, "batch_norm");
  const int N = x->value.dim(0), C = x->value.dim(1);
  const std::size_t HW = x->value.numel() / (static_cast<std::size_t>(N) * C);
  if (state.running_mean.numel() != static_cast<std::size_t>(C) ||
      (gamma && gamma->value.numel() != static_cast<std::size_t>(C)))
    throw std::invalid_argument("batch_norm: channel count mismatch");
  const double M = static_cast<double>(N) * HW;
  if (training && M < 2) throw std::invalid_argument("batch_norm: need more than one value per channel in training");

  Tensor mean({C}), inv_std({C});
  for (int c = 0; c < C; ++c) {
    double mu, var;
    if (training) {
      double s = 0.0;
      for (int n = 0; n < N; ++n) {
        const double* p = x->value.data.data() + (static_cast<std::size_t>(n) * C + c) * HW;
        for (std::size_t l = 0; l < HW; ++l) s += p[l];
      }
      mu = s / M;
      double ss = 0.0;
      for (int n = 0; n < N; ++n) {
        const double* p = x->value.data.data() + (static_cast<std::size_t>(n) * C + c) * HW;
        for (std::size_t l = 0; l < HW; ++l) ss += (p[l] - mu) * (p[l] - mu);
      }
      var = ss / M;
      state.running_mean[c] = (1 - state.momentum) * state.running_mean[c] + state.momentum * mu;
      state.running_var[c] = (1 - state.momentum) * state.running_var[c] + state.momentum * var * M / (M - 1);
    } else {
      mu = state.running_mean[c];
      var = state.running_var[c];
    }
    mean[c] = mu;
    inv_std[c] = 1.0 / std::sqrt(var + state.eps);
  }

  Tensor xhat(x->value.shape), y(x->value.shape);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
      const double ga = gamma ? gamma->value[c] : 1.0, be = beta ? beta->value[c] : 0.0;
      for (std::size_t l = 0; l < HW; ++l) {
        xhat[off + l] = (x->value[off + l] - mean[c]) * inv_std[c];
        y[off + l] = ga * xhat[off + l] + be;
      }
    }

  return make_node(
      "batch_norm", std::move(y), {x},
      [gamma, beta, training, inv_std, xhat = std::move(xhat), N, C, HW, M](Node& self) {
        const Tensor& g = self.grad();
        Tensor dgamma({C}), dbeta({C});
        const Var& xin = self.parents[0];
        for (int c = 0; c < C; ++c) {
          double sg = 0.0, sgx = 0.0;
          for (int n = 0; n < N; ++n) {
            const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
            for (std::size_t l = 0; l < HW; ++l) {
              sg += g[off + l];
              sgx += g[off + l] * xhat[off + l];
            }
          }
          dgamma[c] = sgx;
          dbeta[c] = sg;
          if (!xin->requires_grad) continue;
          const double ga = gamma ? gamma->value[c] : 1.0;
          Tensor& gx = xin->grad();
          for (int n = 0; n < N; ++n) {
            const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
            for (std::size_t l = 0; l < HW; ++l) {
              if (training)
                gx[off + l] += ga * inv_std[c] * (g[off + l] - sg / M - xhat[off + l] * sgx / M);
              else
                gx[off + l] += ga * inv_std[c] * g[off + l];
            }
          }
        }
        if (gamma) accumulate_grad(*gamma, dgamma);
        if (beta) accumulate_grad(*beta, dbeta);
      },
      gamma != nullptr || beta != nullptr);
}

namespace {

template <bool IsMax>
Var pool3x3(const Var& x, int stride) {
  require_4d(x->value, "pool3x3");
  const int N = x->value.dim(0), C = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
  const int OH = (H + 2 - 3) / stride + 1, OW = (W + 2 - 3) / stride + 1;
  Tensor y({N, C, OH, OW});
  // Max: source index per output. Avg: tap count per output.
  std::vector<std::int64_t> aux(y.numel());
  for (int nc = 0; nc < N * C; ++nc) {
    const double* in = x->value.data.data() + static_cast<std::size_t>(nc) * H * W;
    for (int oh = 0; oh < OH; ++oh)
      for (int ow = 0; ow < OW; ++ow) {
        const std::size_t o = (static_cast<std::size_t>(nc) * OH + oh) * OW + ow;
        double acc = IsMax ? -std::numeric_limits<double>::infinity() : 0.0;
        std::int64_t best = -1, count = 0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            const int ih = oh * stride - 1 + i, iw = ow * stride - 1 + j;
            if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
            const double v = in[ih * W + iw];
            if constexpr (IsMax) {
              if (v > acc) {
                acc = v;
                best = static_cast<std::int64_t>(nc) * H * W + ih * W + iw;
              }
            } else {
              acc += v;
              ++count;
            }
          }
        if constexpr (IsMax) {
          y[o] = acc;
          aux[o] = best;
        } else {
          y[o] = acc / static_cast<double>(count);
          aux[o] = count;
        }
      }
  }
  return make_node(IsMax ? "max_pool3x3" : "avg_pool3x3", std::move(y), {x},
                   [aux = std::move(aux), stride, N, C, H, W, OH, OW](Node& self) {
                     const Tensor& g = self.grad();
                     Tensor& gx = self.parents[0]->grad();
                     if constexpr (IsMax) {
                       for (std::size_t o = 0; o < g.numel(); ++o) gx[static_cast<std::size_t>(aux[o])] += g[o];
                     } else {
                       for (int nc = 0; nc < N * C; ++nc)
                         for (int oh = 0; oh < OH; ++oh)
                           for (int ow = 0; ow < OW; ++ow) {
                             const std::size_t o = (static_cast<std::size_t>(nc) * OH + oh) * OW + ow;
                             const double share = g[o] / static_cast<double>(aux[o]);
                             for (int i = 0; i < 3; ++i)
                               for (int j = 0; j < 3; ++j) {
                                 const int ih = oh * stride - 1 + i, iw = ow * stride - 1 + j;
                                 if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                                 gx[(static_cast<std::size_t>(nc) * H + ih) * W + iw] += share;
                               }
                           }
                     }
                   });
}

}  // namespace

Var max_pool3x3(const Var& x, int stride) { return pool3x3<true>(x, stride); }
Var avg_pool3x3(const Var& x, int stride) { return pool3x3<false>(x, stride); }

Var subsample(const Var& x, int stride) {
  require_4d(x->value, "subsample");
  if (stride == 1) return x;
  const int N = x->value.dim(0), C = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
  const int OH = (H + stride - 1) / stride, OW = (W + stride - 1) / stride;
  Tensor y({N, C, OH, OW});
  for (int nc = 0; nc < N * C; ++nc)
    for (int oh = 0; oh < OH; ++oh)
      for (int ow = 0; ow < OW; ++ow)
        y[(static_cast<std::size_t>(nc) * OH + oh) * OW + ow] =
            x->value[(static_cast<std::size_t>(nc) * H + oh * stride) * W + ow * stride];
  return make_node("subsample", std::move(y), {x}, [N, C, H, W, OH, OW, stride](Node& self) {
    const Tensor& g = self.grad();
    Tensor& gx = self.parents[0]->grad();
    for (int nc = 0; nc < N * C; ++nc)
      for (int oh = 0; oh < OH; ++oh)
        for (int ow = 0; ow < OW; ++ow)
          gx[(static_cast<std::size_t>(nc) * H + oh * stride) * W + ow * stride] +=
              g[(static_cast<std::size_t>(nc) * OH + oh) * OW + ow];
  });
}

Var shift_crop(const Var& x) {
  require_4d(x->value, "shift_crop");
  const int N = x->value.dim(0), C = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
  Tensor y(x->value.shape);
  for (int nc = 0; nc < N * C; ++nc)
    for (int h = 0; h + 1 < H; ++h)
      for (int w = 0; w + 1 < W; ++w)
        y[(static_cast<std::size_t>(nc) * H + h) * W + w] = x->value[(static_cast<std::size_t>(nc) * H + h + 1) * W + w + 1];
  return make_node("shift_crop", std::move(y), {x}, [N, C, H, W](Node& self) {
    const Tensor& g = self.grad();
    Tensor& gx = self.parents[0]->grad();
    for (int nc = 0; nc < N * C; ++nc)
      for (int h = 0; h + 1 < H; ++h)
        for (int w = 0; w + 1 < W; ++w)
          gx[(static_cast<std::size_t>(nc) * H + h + 1) * W + w + 1] += g[(static_cast<std::size_t>(nc) * H + h) * W + w];
  });
}

Var zeros(Shape shape) { return constant(Tensor(std::move(shape))); }

Var concat_channels(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_channels: no inputs");
  const Shape& s0 = xs[0]->value.shape;
  int C = 0;
  for (const auto& v : xs) {
    const Shape& s = v->value.shape;
    if (s.size() != 4 || s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3])
      throw std::invalid_argument("concat_channels: incompatible shapes");
    C += s[1];
  }
  const int N = s0[0];
  const std::size_t HW = static_cast<std::size_t>(s0[2]) * s0[3];
  Tensor y({N, C, s0[2], s0[3]});
  for (int n = 0; n < N; ++n) {
    std::size_t c_off = 0;
    for (const auto& v : xs) {
      const std::size_t block = v->value.dim(1) * HW;
      std::copy_n(v->value.data.data() + n * block, block, y.data.data() + (static_cast<std::size_t>(n) * C) * HW + c_off);
      c_off += block;
    }
  }
  return make_node("concat_channels", std::move(y), xs, [N, C, HW](Node& self) {
    const Tensor& g = self.grad();
    for (int n = 0; n < N; ++n) {
      std::size_t c_off = 0;
      for (const auto& v : self.parents) {
        const std::size_t block = v->value.dim(1) * HW;
        if (v->requires_grad) {
          Tensor& gv = v->grad();
          const double* src = g.data.data() + (static_cast<std::size_t>(n) * C) * HW + c_off;
          for (std::size_t i = 0; i < block; ++i) gv[n * block + i] += src[i];
        }
        c_off += block;
      }
    }
  });
}

Var global_avg_pool(const Var& x) {
  require_4d(x->value, "global_avg_pool");
  const int N = x->value.dim(0), C = x->value.dim(1);
  const std::size_t HW = x->value.numel() / (static_cast<std::size_t>(N) * C);
  Tensor y({N, C});
  for (std::size_t i = 0; i < y.numel(); ++i) {
    double s = 0.0;
    for (std::size_t l = 0; l < HW; ++l) s += x->value[i * HW + l];
    y[i] = s / static_cast<double>(HW);
  }
  return make_node("global_avg_pool", std::move(y), {x}, [HW](Node& self) {
    const Tensor& g = self.grad();
    Tensor& gx = self.parents[0]->grad();
    for (std::size_t i = 0; i < g.numel(); ++i)
      for (std::size_t l = 0; l < HW; ++l) gx[i * HW + l] += g[i] / static_cast<double>(HW);
  });
}

Var reshape(const Var& x, Shape shape) {
  if (shape_numel(shape) != x->value.numel())
    throw std::invalid_argument("reshape: " + shape_str(x->value.shape) + " -> " + shape_str(shape));
  Tensor y(std::move(shape), x->value.data);
  return make_node("reshape", std::move(y), {x}, [](Node& self) { add_into(self.parents[0]->grad(), self.grad()); });
}

Var softmax(const Var& logits, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("softmax: temperature must be positive");
  const Tensor& z = logits->value;
  Tensor p(z.shape);
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : z.data) mx = std::max(mx, v / temperature);
  double s = 0.0;
  for (std::size_t i = 0; i < z.numel(); ++i) s += (p[i] = std::exp(z[i] / temperature - mx));
  for (double& v : p.data) v /= s;
  return make_node("softmax", p, {logits}, [temperature](Node& self) {
    const Tensor& g = self.grad();
    const Tensor& pv = self.value;
    double dot = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) dot += g[i] * pv[i];
    Tensor& gz = self.parents[0]->grad();
    for (std::size_t i = 0; i < g.numel(); ++i) gz[i] += pv[i] * (g[i] - dot) / temperature;
  });
}

Var matvec(const Tensor& m, const Var& v) {
  if (m.rank() != 2 || static_cast<std::size_t>(m.dim(1)) != v->value.numel())
    throw std::invalid_argument("matvec: " + shape_str(m.shape) + " times " + shape_str(v->value.shape));
  const int R = m.dim(0), Cc = m.dim(1);
  Tensor y({R});
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < Cc; ++c) y[r] += m[static_cast<std::size_t>(r) * Cc + c] * v->value[c];
  return make_node("matvec", std::move(y), {v}, [m, R, Cc](Node& self) {
    const Tensor& g = self.grad();
    Tensor& gv = self.parents[0]->grad();
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < Cc; ++c) gv[c] += m[static_cast<std::size_t>(r) * Cc + c] * g[r];
  });
}

Var cross_entropy(const Var& logits, std::span<const int> labels) {
  const Tensor& z = logits->value;
  if (z.rank() != 2 || static_cast<std::size_t>(z.dim(0)) != labels.size() || labels.empty())
    throw std::invalid_argument("cross_entropy: logits " + shape_str(z.shape) + " vs " + std::to_string(labels.size()) +
                                " labels");
  const int N = z.dim(0), K = z.dim(1);
  Tensor prob(z.shape);
  double loss = 0.0;
  for (int n = 0; n < N; ++n) {
    const int y = labels[n];
    if (y < 0 || y >= K) throw std::invalid_argument("cross_entropy: label out of range");
    const double* row = z.data.data() + static_cast<std::size_t>(n) * K;
    const double mx = *std::max_element(row, row + K);
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += std::exp(row[k] - mx);
    const double lse = mx + std::log(s);
    for (int k = 0; k < K; ++k) prob[static_cast<std::size_t>(n) * K + k] = std::exp(row[k] - lse);
    loss += lse - row[y];
  }
  std::vector<int> lab(labels.begin(), labels.end());
  return make_node("cross_entropy", Tensor({}, {loss / N}), {logits},
                   [prob = std::move(prob), lab = std::move(lab), N, K](Node& self) {
                     const double g = self.grad()[0] / N;
                     Tensor& gz = self.parents[0]->grad();
                     for (int n = 0; n < N; ++n)
                       for (int k = 0; k < K; ++k) {
                         const std::size_t i = static_cast<std::size_t>(n) * K + k;
                         gz[i] += g * (prob[i] - (k == lab[n] ? 1.0 : 0.0));
                       }
                   });
}

Var shift_weight_l2(const std::vector<shift::ShiftParam*>& params, double lambda) {
  double total = 0.0;
  for (const auto* p : params)
    for (std::size_t i = 0; i < p->numel(); ++i) {
      const double s = fxp::to_int(shift::ternary_sign(p->S.value[i]));
      const double w = std::exp2(p->P.value[i]) * s;
      total += w * w;
    }
  return make_node(
      "shift_weight_l2", Tensor({}, {0.5 * lambda * total}), {},
      [params, lambda](Node& self) {
        const double g = self.grad()[0];
        for (auto* p : params) {
          Tensor dP(p->shape()), dS(p->shape());
          for (std::size_t i = 0; i < p->numel(); ++i) {
            const double s = fxp::to_int(shift::ternary_sign(p->S.value[i]));
            const double four_p = std::exp2(2.0 * p->P.value[i]);
            dP[i] = g * lambda * s * s * four_p * std::numbers::ln2;
            dS[i] = g * lambda * four_p * s;
          }
          accumulate_grad(p->P, dP);
          accumulate_grad(p->S, dS);
        }
      },
      !params.empty());
}

Var raw_l2(const std::vector<shift::ShiftParam*>& params, double lambda) {
  double total = 0.0;
  for (const auto* p : params)
    for (std::size_t i = 0; i < p->numel(); ++i)
      total += p->P.value[i] * p->P.value[i] + p->S.value[i] * p->S.value[i];
  return make_node(
      "raw_l2", Tensor({}, {0.5 * lambda * total}), {},
      [params, lambda](Node& self) {
        const double g = self.grad()[0];
        for (auto* p : params) {
          Tensor dP = p->P.value, dS = p->S.value;
          for (double& v : dP.data) v *= g * lambda;
          for (double& v : dS.data) v *= g * lambda;
          accumulate_grad(p->P, dP);
          accumulate_grad(p->S, dS);
        }
      },
      !params.empty());
}

}  // namespace shiftnas::nn
