// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "shiftnas/space.hpp"

using namespace shiftnas;
using namespace shiftnas::space;
using gradcheck::random_tensor;

namespace {
Var weights_of(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return nn::constant(Tensor({n}, std::move(v)));
}
}  // namespace

TEST_CASE("op names round trip and groups") {
  for (int i = 0; i < kNumOps; ++i) {
    const auto k = static_cast<OpKind>(i);
    CHECK(op_from_name(op_name(k)) == k);
    CHECK(group_ops(group_of(k))[static_cast<std::size_t>(index_in_group(k))] == k);
  }
  CHECK(op_name(OpKind::sep_conv_3x3) == "sep_conv_3x3");
  CHECK(op_name(OpKind::zero) == "zero");
  CHECK(group_of(OpKind::dil_conv_5x5) == Group::conv);
  CHECK(group_of(OpKind::skip_connect) == Group::topo);
  CHECK(has_shift_weights(OpKind::sep_conv_5x5));
  CHECK_FALSE(has_shift_weights(OpKind::avg_pool_3x3));
  CHECK_THROWS(op_from_name("conv_7x1_1x7"));
}

TEST_CASE("softmax relaxation examples") {
  const auto eq = nn::softmax(weights_of({0.3, 0.3, 0.3, 0.3}));
  for (double v : eq->value.data) CHECK(v == doctest::Approx(0.25));
  const auto two = nn::softmax(weights_of({std::log(3.0), 0.0}));
  CHECK(two->value[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(two->value[1] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("edge indexing") {
  CHECK(num_edges(4) == 14);
  CHECK(num_edges(2) == 5);
  for (int j = 0; j < 6; ++j) {
    CHECK(node_arity(j) == j + 2);
    CHECK(edge_offset(j + 1) - edge_offset(j) == node_arity(j));
  }
  CHECK(edge_offset(0) == 0);
}

TEST_CASE("reduction placement") {
  SupernetConfig c;
  c.cells = 8;
  CHECK(resolve_reductions(c) == std::vector<int>{2, 5});
  c.cells = 5;
  CHECK(resolve_reductions(c) == std::vector<int>{1, 3});
  c.reductions = {7};
  CHECK_THROWS(resolve_reductions(c));
  c.reductions = {3, 1};
  CHECK(resolve_reductions(c) == std::vector<int>{1, 3});
  c.reductions = {1, 1};
  CHECK_THROWS(resolve_reductions(c));
}

TEST_CASE("mixed op is the weighted sum of its candidates") {
  Rng rng(4);
  MixedOp op(3, 1, Domain::shift, rng);
  CHECK(op.kinds().size() == 8);
  Parameter x(random_tensor({2, 3, 5, 5}, rng));
  Context ctx;
  ctx.training = false;
  std::vector<Tensor> single;
  for (int g = 0; g < 2; ++g)
    for (int k = 0; k < 4; ++k) {
      std::vector<double> a(4, 0.0), b(4, 0.0);
      (g == 0 ? a : b)[static_cast<std::size_t>(k)] = 1.0;
      single.push_back(op.forward(nn::leaf(x), ctx, {weights_of(a), weights_of(b)})->value);
    }
  std::mt19937_64 r(1);
  std::vector<double> a(4), b(4);
  for (auto& v : a) v = std::uniform_real_distribution<double>(0, 1)(r);
  for (auto& v : b) v = std::uniform_real_distribution<double>(0, 1)(r);
  const Tensor mixed = op.forward(nn::leaf(x), ctx, {weights_of(a), weights_of(b)})->value;
  for (std::size_t i = 0; i < mixed.numel(); ++i) {
    double ref = 0;
    for (int k = 0; k < 4; ++k) ref += a[k] * single[k][i] + b[k] * single[4 + k][i];
    CHECK(mixed[i] == doctest::Approx(ref).epsilon(1e-12));
  }
  // all-zero weights produce a zero node input
  const Tensor z = op.forward(nn::leaf(x), ctx, {weights_of({0, 0, 0, 0}), weights_of({0, 0, 0, 0})})->value;
  for (double v : z.data) CHECK(v == 0.0);
  // the zero candidate alone contributes nothing
  CHECK(single[7].data == z.data);
  // a dominant logit approaches that candidate
  const Tensor near = op.forward(nn::leaf(x), ctx, {nn::softmax(weights_of({0, 40, 0, 0})), weights_of({0, 0, 0, 0})})->value;
  for (std::size_t i = 0; i < near.numel(); ++i) CHECK(near[i] == doctest::Approx(single[1][i]).epsilon(1e-9));
  CHECK_THROWS(op.forward(nn::leaf(x), ctx, {weights_of({1, 0, 0})}));
}

TEST_CASE("pruning keeps two candidates in order") {
  Rng rng(4);
  MixedOp op(3, 2, Domain::shift, rng);
  op.prune({OpKind::skip_connect, OpKind::dil_conv_3x3});
  CHECK(op.kinds() == std::vector<OpKind>{OpKind::skip_connect, OpKind::dil_conv_3x3});
  CHECK(op.group_sizes() == std::vector<int>{2});
  Parameter x(random_tensor({1, 3, 6, 6}, rng));
  Context ctx;
  const auto y = op.forward(nn::leaf(x), ctx, {weights_of({0.5, 0.5})});
  CHECK(y->value.shape == Shape{1, 3, 3, 3});
}

TEST_CASE("strided candidates share an output shape") {
  Rng rng(8);
  Parameter x(random_tensor({1, 4, 7, 7}, rng));
  Context ctx;
  for (int i = 0; i < kNumOps; ++i) {
    auto m = make_op(static_cast<OpKind>(i), 4, 2, Domain::shift, false, true, rng);
    CHECK(m->forward(nn::leaf(x), ctx)->value.shape == Shape{1, 4, 4, 4});
  }
}

TEST_CASE("supernet forward and structure") {
  Rng rng(3);
  SupernetConfig c{.cells = 5, .channels = 4, .nodes = 3, .in_channels = 3, .classes = 2};
  Supernet net(c, Domain::shift, rng);
  CHECK(net.reductions() == std::vector<int>{1, 3});
  CHECK(net.cells().size() == 5);
  for (std::size_t i = 0; i < net.cells().size(); ++i) {
    CHECK(net.cells()[i].reduction() == (i == 1 || i == 3));
    CHECK(net.cells()[i].edges().size() == static_cast<std::size_t>(num_edges(3)));
  }
  CellWeights w;
  for (int e = 0; e < num_edges(3); ++e) w.edge.push_back({weights_of({.25, .25, .25, .25}), weights_of({.25, .25, .25, .25})});
  Parameter x(random_tensor({2, 3, 8, 8}, rng));
  Context ctx;
  const auto y = net.forward(nn::leaf(x), ctx, w, w);
  CHECK(y->value.shape == Shape{2, 2});

  // conv weights: each edge carries the four conv candidates; the rest is stem,
  // preprocessing and head.
  const auto refs = net.params();
  std::size_t cand = 0;
  for (auto& cell : net.cells())
    for (auto& e : cell.edges()) {
      nn::ParamRefs r;
      e.collect(r, "");
      cand += r.weight_count();
    }
  CHECK(cand > 0);
  CHECK(refs.weight_count() > cand);
  CHECK(refs.shift_params().size() + 1 >= refs.convs.size());
}
