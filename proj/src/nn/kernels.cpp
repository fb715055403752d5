// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/nn/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <thread>
#include <vector>

#include "shiftnas/nn/counters.hpp"

namespace shiftnas::nn {

int conv_out_size(int in, int kernel, const ConvGeom& g) {
  const int eff = g.dilation * (kernel - 1) + 1;
  return (in + 2 * g.pad - eff) / g.stride + 1;
}

Shape conv_output_shape(const Shape& x, const Shape& w, const ConvGeom& g) {
  if (x.size() != 4 || w.size() != 4) throw std::invalid_argument("conv2d: expected 4-D input and weight");
  if (g.groups < 1 || g.stride < 1 || g.dilation < 1 || g.pad < 0) throw std::invalid_argument("conv2d: bad geometry");
  if (x[1] % g.groups != 0 || w[0] % g.groups != 0)
    throw std::invalid_argument("conv2d: channels not divisible by groups");
  if (w[1] != x[1] / g.groups)
    throw std::invalid_argument("conv2d: weight " + shape_str(w) + " does not match input " + shape_str(x));
  const int oh = conv_out_size(x[2], w[2], g), ow = conv_out_size(x[3], w[3], g);
  if (oh <= 0 || ow <= 0) throw std::invalid_argument("conv2d: kernel larger than padded input " + shape_str(x));
  return {x[0], w[0], oh, ow};
}

int worker_threads() {
  static const int n = [] {
    if (const char* env = std::getenv("SHIFTNAS_THREADS")) {
      const int v = std::atoi(env);
      if (v > 0) return v;
    }
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  }();
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(worker_threads()), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t block = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * block, hi = std::min(n, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

namespace {

struct Lowering {
  int N, C, H, W, O, kh, kw, OH, OW, cin_g, cout_g, K, L;
  ConvGeom g;

  Lowering(const Shape& x, const Shape& w, const ConvGeom& geom) : g(geom) {
    const Shape y = conv_output_shape(x, w, geom);
    N = x[0], C = x[1], H = x[2], W = x[3];
    O = w[0], kh = w[2], kw = w[3];
    OH = y[2], OW = y[3];
    cin_g = C / g.groups;
    cout_g = O / g.groups;
    K = cin_g * kh * kw;
    L = OH * OW;
  }

  // Gather one sample/group into col[K][L]; out-of-bounds taps read `zero`.
  template <typename T>
  void im2col(const T* x_n, int group, T* col, T zero) const {
    for (int c = 0; c < cin_g; ++c) {
      const T* plane = x_n + static_cast<std::size_t>(group * cin_g + c) * H * W;
      for (int i = 0; i < kh; ++i)
        for (int j = 0; j < kw; ++j) {
          T* row = col + static_cast<std::size_t>((c * kh + i) * kw + j) * L;
          for (int oh = 0; oh < OH; ++oh) {
            const int ih = oh * g.stride - g.pad + i * g.dilation;
            for (int ow = 0; ow < OW; ++ow) {
              const int iw = ow * g.stride - g.pad + j * g.dilation;
              row[oh * OW + ow] = (ih >= 0 && ih < H && iw >= 0 && iw < W) ? plane[ih * W + iw] : zero;
            }
          }
        }
    }
  }

  void col2im_add(const double* col, int group, double* dx_n) const {
    for (int c = 0; c < cin_g; ++c) {
      double* plane = dx_n + static_cast<std::size_t>(group * cin_g + c) * H * W;
      for (int i = 0; i < kh; ++i)
        for (int j = 0; j < kw; ++j) {
          const double* row = col + static_cast<std::size_t>((c * kh + i) * kw + j) * L;
          for (int oh = 0; oh < OH; ++oh) {
            const int ih = oh * g.stride - g.pad + i * g.dilation;
            if (ih < 0 || ih >= H) continue;
            for (int ow = 0; ow < OW; ++ow) {
              const int iw = ow * g.stride - g.pad + j * g.dilation;
              if (iw >= 0 && iw < W) plane[ih * W + iw] += row[oh * OW + ow];
            }
          }
        }
    }
  }
};

}  // namespace

Tensor conv2d_real(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeom& g) {
  const Lowering lw(x.shape, w.shape, g);
  if (bias && bias->numel() != static_cast<std::size_t>(lw.O)) throw std::invalid_argument("conv2d: bias length mismatch");
  Tensor y({lw.N, lw.O, lw.OH, lw.OW});
  parallel_for(static_cast<std::size_t>(lw.N), [&](std::size_t n) {
    std::vector<double> col(static_cast<std::size_t>(lw.K) * lw.L);
    const double* xn = x.data.data() + n * lw.C * lw.H * lw.W;
    for (int grp = 0; grp < g.groups; ++grp) {
      lw.im2col(xn, grp, col.data(), 0.0);
      for (int oc = grp * lw.cout_g; oc < (grp + 1) * lw.cout_g; ++oc) {
        double* out = y.data.data() + (n * lw.O + oc) * lw.L;
        std::fill(out, out + lw.L, bias ? (*bias)[oc] : 0.0);
        const double* wrow = w.data.data() + static_cast<std::size_t>(oc) * lw.K;
        for (int k = 0; k < lw.K; ++k) {
          const double wk = wrow[k];
          const double* crow = col.data() + static_cast<std::size_t>(k) * lw.L;
          for (int l = 0; l < lw.L; ++l) out[l] += wk * crow[l];
        }
      }
    }
  });
  const std::uint64_t terms = std::uint64_t(lw.N) * lw.O * lw.K * lw.L;
  op_counters().add({.adds = terms, .weight_muls = terms});
  return y;
}

FixedTensor conv2d_shift(const FixedTensor& x, const shift::QuantizedView& w, const std::vector<fxp::Fixed>* bias,
                         const ConvGeom& g) {
  const Lowering lw(x.shape, w.shape, g);
  if (bias && bias->size() != static_cast<std::size_t>(lw.O)) throw std::invalid_argument("conv2d: bias length mismatch");
  FixedTensor y({lw.N, lw.O, lw.OH, lw.OW});
  std::vector<OpCounts> per_sample(static_cast<std::size_t>(lw.N));
  parallel_for(static_cast<std::size_t>(lw.N), [&](std::size_t n) {
    OpCounts cnt;
    std::vector<std::int32_t> col(static_cast<std::size_t>(lw.K) * lw.L);
    std::vector<std::int64_t> acc(static_cast<std::size_t>(lw.L));
    // Fixed is a thin wrapper around its raw word; gather raw words directly.
    std::vector<std::int32_t> xn_raw(static_cast<std::size_t>(lw.C) * lw.H * lw.W);
    const fxp::Fixed* xn = x.data.data() + n * xn_raw.size();
    for (std::size_t i = 0; i < xn_raw.size(); ++i) xn_raw[i] = xn[i].raw();
    for (int grp = 0; grp < g.groups; ++grp) {
      lw.im2col(xn_raw.data(), grp, col.data(), std::int32_t{0});
      for (int oc = grp * lw.cout_g; oc < (grp + 1) * lw.cout_g; ++oc) {
        const std::int64_t init = bias ? (std::int64_t{(*bias)[oc].raw()} << fxp::kFracBits) : 0;
        std::fill(acc.begin(), acc.end(), init);
        if (bias) cnt.adds += lw.L;
        for (int k = 0; k < lw.K; ++k) {
          const std::size_t widx = static_cast<std::size_t>(oc) * lw.K + k;
          const fxp::Sign s = w.sign[widx];
          if (s == fxp::Sign::zero) continue;
          const int rshift = -w.shift[widx];
          const std::int32_t* crow = col.data() + static_cast<std::size_t>(k) * lw.L;
          if (s == fxp::Sign::pos) {
            for (int l = 0; l < lw.L; ++l) acc[l] += (std::int64_t{crow[l]} << fxp::kFracBits) >> rshift;
          } else {
            for (int l = 0; l < lw.L; ++l) acc[l] -= (std::int64_t{crow[l]} << fxp::kFracBits) >> rshift;
            cnt.flips += lw.L;
          }
          cnt.shifts += lw.L;
          cnt.adds += lw.L;
        }
        fxp::Fixed* out = y.data.data() + (n * lw.O + oc) * lw.L;
        for (int l = 0; l < lw.L; ++l) out[l] = fxp::narrow_wide(acc[l]);
      }
    }
    per_sample[n] = cnt;
  });
  OpCounts total;
  for (const auto& c : per_sample) {
    total.adds += c.adds;
    total.shifts += c.shifts;
    total.flips += c.flips;
  }
  op_counters().add(total);
  return y;
}

void conv2d_real_backward(const Tensor& x, const Tensor& w, const Tensor& dy, const ConvGeom& g, Tensor* dx,
                          Tensor* dw) {
  const Lowering lw(x.shape, w.shape, g);
  if (dy.shape != Shape{lw.N, lw.O, lw.OH, lw.OW}) throw std::invalid_argument("conv2d backward: bad upstream shape");
  if (dx) *dx = Tensor(x.shape);
  std::vector<Tensor> dw_parts;
  if (dw) dw_parts.assign(static_cast<std::size_t>(lw.N), Tensor(w.shape));
  parallel_for(static_cast<std::size_t>(lw.N), [&](std::size_t n) {
    std::vector<double> col(static_cast<std::size_t>(lw.K) * lw.L);
    std::vector<double> dcol(dx ? col.size() : 0);
    const double* xn = x.data.data() + n * lw.C * lw.H * lw.W;
    for (int grp = 0; grp < g.groups; ++grp) {
      if (dw) {
        lw.im2col(xn, grp, col.data(), 0.0);
        for (int oc = grp * lw.cout_g; oc < (grp + 1) * lw.cout_g; ++oc) {
          const double* go = dy.data.data() + (n * lw.O + oc) * lw.L;
          double* dwrow = dw_parts[n].data.data() + static_cast<std::size_t>(oc) * lw.K;
          for (int k = 0; k < lw.K; ++k) {
            const double* crow = col.data() + static_cast<std::size_t>(k) * lw.L;
            double s = 0.0;
            for (int l = 0; l < lw.L; ++l) s += go[l] * crow[l];
            dwrow[k] += s;
          }
        }
      }
      if (dx) {
        std::fill(dcol.begin(), dcol.end(), 0.0);
        for (int oc = grp * lw.cout_g; oc < (grp + 1) * lw.cout_g; ++oc) {
          const double* go = dy.data.data() + (n * lw.O + oc) * lw.L;
          const double* wrow = w.data.data() + static_cast<std::size_t>(oc) * lw.K;
          for (int k = 0; k < lw.K; ++k) {
            const double wk = wrow[k];
            if (wk == 0.0) continue;
            double* drow = dcol.data() + static_cast<std::size_t>(k) * lw.L;
            for (int l = 0; l < lw.L; ++l) drow[l] += wk * go[l];
          }
        }
        lw.col2im_add(dcol.data(), grp, dx->data.data() + n * lw.C * lw.H * lw.W);
      }
    }
  });
  if (dw) {
    *dw = Tensor(w.shape);
    for (const auto& part : dw_parts)
      for (std::size_t i = 0; i < part.numel(); ++i) (*dw)[i] += part[i];
  }
}

}  // namespace shiftnas::nn
