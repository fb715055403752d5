// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/space.hpp"

#include <algorithm>
#include <stdexcept>

namespace shiftnas::space {

namespace {
constexpr std::array<std::string_view, kNumOps> kNames = {"sep_conv_3x3", "sep_conv_5x5", "dil_conv_3x3",
                                                           "dil_conv_5x5", "max_pool_3x3", "avg_pool_3x3",
                                                           "skip_connect", "zero"};
}

std::string_view op_name(OpKind k) { return kNames.at(static_cast<std::size_t>(k)); }

OpKind op_from_name(std::string_view name) {
  for (int i = 0; i < kNumOps; ++i)
    if (kNames[i] == name) return static_cast<OpKind>(i);
  throw std::invalid_argument("unknown operation '" + std::string(name) + "'");
}

Group group_of(OpKind k) { return static_cast<int>(k) < kGroupSize ? Group::conv : Group::topo; }
int index_in_group(OpKind k) { return static_cast<int>(k) % kGroupSize; }
const std::array<OpKind, kGroupSize>& group_ops(Group g) { return g == Group::conv ? kConvOps : kTopoOps; }
bool has_shift_weights(OpKind k) { return group_of(k) == Group::conv; }

ModulePtr make_op(OpKind k, int channels, int stride, Domain d, bool affine, bool search_mode, Rng& rng) {
  switch (k) {
    case OpKind::sep_conv_3x3: return nn::make_sep_conv(d, channels, 3, stride, affine, rng);
    case OpKind::sep_conv_5x5: return nn::make_sep_conv(d, channels, 5, stride, affine, rng);
    case OpKind::dil_conv_3x3: return nn::make_dil_conv(d, channels, 3, stride, affine, rng);
    case OpKind::dil_conv_5x5: return nn::make_dil_conv(d, channels, 5, stride, affine, rng);
    case OpKind::max_pool_3x3:
    case OpKind::avg_pool_3x3: {
      auto pool = std::make_unique<nn::Pool3x3>(k == OpKind::max_pool_3x3, stride);
      if (!search_mode) return pool;
      auto seq = std::make_unique<nn::Sequential>();
      seq->add("pool", std::move(pool)).add("bn", std::make_unique<nn::BatchNorm2d>(channels, false));
      return seq;
    }
    case OpKind::skip_connect:
      if (stride == 1) return std::make_unique<nn::Identity>();
      return std::make_unique<nn::Subsample>(stride);
    case OpKind::zero: return std::make_unique<nn::Zero>(stride);
  }
  throw std::invalid_argument("make_op: bad operation kind");
}

int edge_offset(int node) { return node * (node + 3) / 2; }
int num_edges(int nodes) { return edge_offset(nodes); }

// ---------------------------------------------------------------------------

MixedOp::MixedOp(int channels, int stride, Domain d, Rng& rng) {
  for (const auto& group : {kConvOps, kTopoOps}) {
    for (OpKind k : group) {
      kinds_.push_back(k);
      ops_.push_back(make_op(k, channels, stride, d, false, true, rng));
    }
    group_sizes_.push_back(kGroupSize);
  }
}

Var MixedOp::forward(const Var& x, const Context& ctx, const std::vector<Var>& weights) {
  if (weights.size() != group_sizes_.size())
    throw std::invalid_argument("MixedOp: expected " + std::to_string(group_sizes_.size()) + " weight groups");
  std::vector<Var> parts;
  std::size_t at = 0;
  for (std::size_t g = 0; g < group_sizes_.size(); ++g) {
    const auto n = static_cast<std::size_t>(group_sizes_[g]);
    if (weights[g]->value.numel() != n) throw std::invalid_argument("MixedOp: group weight size mismatch");
    std::vector<Var> outs;
    for (std::size_t i = at; i < at + n; ++i) outs.push_back(ops_[i]->forward(x, ctx));
    parts.push_back(nn::weighted_sum(outs, weights[g]));
    at += n;
  }
  return parts.size() == 1 ? parts[0] : nn::add_n(parts);
}

void MixedOp::collect(ParamRefs& out, const std::string& prefix) {
  for (std::size_t i = 0; i < ops_.size(); ++i) ops_[i]->collect(out, nn::join_name(prefix, std::string(op_name(kinds_[i]))));
}

void MixedOp::prune(const std::vector<OpKind>& keep) {
  std::vector<OpKind> kinds;
  std::vector<ModulePtr> ops;
  for (OpKind k : keep) {
    auto it = std::find(kinds_.begin(), kinds_.end(), k);
    if (it == kinds_.end()) throw std::invalid_argument("MixedOp::prune: operation not present");
    const auto idx = static_cast<std::size_t>(it - kinds_.begin());
    if (!ops_[idx]) throw std::invalid_argument("MixedOp::prune: operation listed twice");
    kinds.push_back(k);
    ops.push_back(std::move(ops_[idx]));
  }
  kinds_ = std::move(kinds);
  ops_ = std::move(ops);
  group_sizes_ = {static_cast<int>(kinds_.size())};
}

// ---------------------------------------------------------------------------

SearchCell::SearchCell(Domain d, int nodes, int c_pp, int c_p, int c, bool reduction, bool reduction_prev, Rng& rng)
    : nodes_(nodes), reduction_(reduction) {
  if (reduction_prev)
    pre0_ = std::make_unique<nn::FactorizedReduce>(d, c_pp, c, false, rng);
  else
    pre0_ = nn::make_relu_conv_bn(d, c_pp, c, 1, 1, 0, false, rng);
  pre1_ = nn::make_relu_conv_bn(d, c_p, c, 1, 1, 0, false, rng);
  for (int j = 0; j < nodes; ++j)
    for (int i = 0; i < node_arity(j); ++i) edges_.emplace_back(c, reduction && i < 2 ? 2 : 1, d, rng);
}

Var SearchCell::forward(const Var& s0, const Var& s1, const Context& ctx, const CellWeights& w) {
  if (w.edge.size() != edges_.size()) throw std::invalid_argument("SearchCell: edge weight count mismatch");
  const bool gated = !w.node_gamma.empty();
  if (gated && w.node_gamma.size() != static_cast<std::size_t>(nodes_))
    throw std::invalid_argument("SearchCell: node importance count mismatch");
  std::vector<Var> states{pre0_->forward(s0, ctx), pre1_->forward(s1, ctx)};
  for (int j = 0; j < nodes_; ++j) {
    std::vector<Var> ins;
    for (int i = 0; i < node_arity(j); ++i) {
      const int e = edge_offset(j) + i;
      ins.push_back(edges_[e].forward(states[i], ctx, w.edge[e]));
    }
    states.push_back(gated ? nn::weighted_sum(ins, w.node_gamma[j]) : nn::add_n(ins));
  }
  return nn::concat_channels(std::vector<Var>(states.begin() + 2, states.end()));
}

void SearchCell::collect(ParamRefs& out, const std::string& prefix) {
  pre0_->collect(out, nn::join_name(prefix, "pre0"));
  pre1_->collect(out, nn::join_name(prefix, "pre1"));
  for (std::size_t e = 0; e < edges_.size(); ++e) edges_[e].collect(out, nn::join_name(prefix, "edge" + std::to_string(e)));
}

// ---------------------------------------------------------------------------

std::vector<int> resolve_reductions(const SupernetConfig& cfg) {
  if (cfg.cells < 1) throw std::invalid_argument("supernet: cells must be >= 1");
  if (cfg.nodes < 1) throw std::invalid_argument("supernet: nodes must be >= 1");
  std::vector<int> r = cfg.reductions;
  if (r.empty() && cfg.cells >= 3) r = {cfg.cells / 3, 2 * cfg.cells / 3};
  std::sort(r.begin(), r.end());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < 0 || r[i] >= cfg.cells)
      throw std::invalid_argument("supernet: reduction position " + std::to_string(r[i]) + " outside [0, " +
                                  std::to_string(cfg.cells) + ")");
    if (i > 0 && r[i] == r[i - 1]) throw std::invalid_argument("supernet: duplicate reduction position");
  }
  return r;
}

std::unique_ptr<nn::Conv2d> make_classifier(Domain d, int channels, int classes, Rng& rng) {
  return std::make_unique<nn::Conv2d>(d, channels, classes, 1, nn::ConvGeom{}, true, rng);
}

Var classify(nn::Conv2d& head, const Var& features, const Context& ctx) {
  const Var pooled = nn::global_avg_pool(features);
  const int N = pooled->value.dim(0), C = pooled->value.dim(1);
  const Var logits = head.forward(nn::reshape(pooled, {N, C, 1, 1}), ctx);
  return nn::reshape(logits, {N, logits->value.dim(1)});
}

Supernet::Supernet(const SupernetConfig& cfg, Domain d, Rng& rng) : cfg_(cfg), reductions_(resolve_reductions(cfg)) {
  int c_curr = cfg.stem_multiplier * cfg.channels;
  stem_.add("conv", std::make_unique<nn::Conv2d>(d, cfg.in_channels, c_curr, 3, nn::ConvGeom{1, 1, 1, 1}, false, rng))
      .add("bn", std::make_unique<nn::BatchNorm2d>(c_curr, true));
  int c_pp = c_curr, c_p = c_curr;
  c_curr = cfg.channels;
  bool reduction_prev = false;
  for (int i = 0; i < cfg.cells; ++i) {
    const bool reduction = std::binary_search(reductions_.begin(), reductions_.end(), i);
    if (reduction) c_curr *= 2;
    cells_.emplace_back(d, cfg.nodes, c_pp, c_p, c_curr, reduction, reduction_prev, rng);
    reduction_prev = reduction;
    c_pp = c_p;
    c_p = cfg.nodes * c_curr;
  }
  classifier_ = make_classifier(d, c_p, cfg.classes, rng);
}

Var Supernet::forward(const Var& x, const Context& ctx, const CellWeights& normal, const CellWeights& reduce) {
  Var s0 = stem_.forward(x, ctx);
  Var s1 = s0;
  for (auto& cell : cells_) {
    Var next = cell.forward(s0, s1, ctx, cell.reduction() ? reduce : normal);
    s0 = s1;
    s1 = next;
  }
  return classify(*classifier_, s1, ctx);
}

ParamRefs Supernet::params() {
  ParamRefs refs;
  stem_.collect(refs, "stem");
  for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i].collect(refs, "cell" + std::to_string(i));
  classifier_->collect(refs, "classifier");
  return refs;
}

}  // namespace shiftnas::space
