// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "json.hpp"
#include "shiftnas/genotype.hpp"
#include "shiftnas/nn/counters.hpp"

using namespace shiftnas;
using namespace shiftnas::genotype;
using space::OpKind;

namespace {

// Conv weight count of one operation on C channels.
std::size_t op_weights(OpKind k, int C) {
  const std::size_t c = static_cast<std::size_t>(C);
  switch (k) {
    case OpKind::sep_conv_3x3: return 2 * (9 * c + c * c);
    case OpKind::sep_conv_5x5: return 2 * (25 * c + c * c);
    case OpKind::dil_conv_3x3: return 9 * c + c * c;
    case OpKind::dil_conv_5x5: return 25 * c + c * c;
    default: return 0;
  }
}

std::size_t structural_count(const Genotype& g, const NetworkConfig& cfg, const std::vector<int>& reductions) {
  std::size_t n = 0;
  const int stem = cfg.stem_multiplier * cfg.channels;
  n += static_cast<std::size_t>(cfg.in_channels) * stem * 9;
  int c_pp = stem, c_p = stem, c = cfg.channels;
  for (int i = 0; i < cfg.cells; ++i) {
    const bool red = std::find(reductions.begin(), reductions.end(), i) != reductions.end();
    if (red) c *= 2;
    n += static_cast<std::size_t>(c_pp) * c + static_cast<std::size_t>(c_p) * c;  // two 1x1 preprocessing convs
    for (const auto& node : red ? g.reduce : g.normal)
      for (const auto& e : node) n += op_weights(e.op, c);
    c_pp = c_p;
    c_p = c * static_cast<int>((red ? g.reduce_concat : g.normal_concat).size());
  }
  n += static_cast<std::size_t>(c_p) * cfg.classes;
  return n;
}

Genotype random_genotype(std::mt19937_64& rng, int nodes) {
  const std::vector<OpKind> ops{OpKind::sep_conv_3x3, OpKind::sep_conv_5x5, OpKind::dil_conv_3x3, OpKind::dil_conv_5x5,
                                OpKind::max_pool_3x3, OpKind::avg_pool_3x3, OpKind::skip_connect};
  auto cell = [&] {
    std::vector<NodeGenes> c;
    for (int j = 0; j < nodes; ++j) {
      const int a = static_cast<int>(rng() % (j + 2));
      int b = static_cast<int>(rng() % (j + 1));
      if (b >= a) ++b;
      c.push_back({Entry{ops[rng() % ops.size()], a}, Entry{ops[rng() % ops.size()], b}});
    }
    return c;
  };
  Genotype g;
  g.normal = cell();
  g.reduce = cell();
  g.normal_concat = g.reduce_concat = default_concat(nodes);
  return g;
}

}  // namespace

TEST_CASE("published genotype rows") {
  const Genotype g = cifar10();
  CHECK(g.normal[0][0] == Entry{OpKind::skip_connect, 0});
  CHECK(g.normal[0][1] == Entry{OpKind::skip_connect, 1});
  CHECK(g.normal[3][1] == Entry{OpKind::dil_conv_5x5, 4});
  CHECK(g.reduce[1][1] == Entry{OpKind::max_pool_3x3, 1});
  CHECK(g.normal_concat == std::vector<int>{2, 3, 4, 5});
  const Genotype h = cifar100();
  CHECK(h.reduce[2][1] == Entry{OpKind::dil_conv_5x5, 3});
  validate(g);
  validate(h);
}

TEST_CASE("serialize and parse round trip") {
  CHECK(parse(serialize(cifar10())) == cifar10());
  CHECK(parse(serialize(cifar100())) == cifar100());
  CHECK(serialize(parse(serialize(cifar10()))) == serialize(cifar10()));
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    const Genotype g = random_genotype(rng, 1 + static_cast<int>(rng() % 5));
    validate(g);
    CHECK(parse(serialize(g)) == g);
  }
}

TEST_CASE("parse rejects invalid genotypes") {
  auto j = nlohmann::json::parse(serialize(cifar10()));
  auto bad_op = j;
  bad_op["normal"][0][0][0] = "conv_7x7";
  CHECK_THROWS(parse(bad_op.dump()));
  auto bad_pred = j;
  bad_pred["normal"][0][0][1] = 2;
  CHECK_THROWS(parse(bad_pred.dump()));
  auto zero_op = j;
  zero_op["reduce"][1][0][0] = "zero";
  CHECK_THROWS(parse(zero_op.dump()));
  auto three = j;
  three["normal"][0].push_back(three["normal"][0][0]);
  CHECK_THROWS(parse(three.dump()));
  CHECK_THROWS(parse("{not json"));
  Genotype dup = cifar10();
  dup.normal[1][1].pred = 0;
  CHECK_THROWS(validate(dup));
}

TEST_CASE("pretty print lists every node") {
  const std::string t = pretty(cifar10());
  CHECK(t.find("('skip_connect', 0), ('skip_connect', 1)") != std::string::npos);
  CHECK(t.find("('skip_connect', 0), ('dil_conv_5x5', 2)") != std::string::npos);
}

TEST_CASE("instantiate wiring and parameter count") {
  const NetworkConfig cfg{.cells = 5, .channels = 4, .in_channels = 3, .classes = 10};
  auto net = instantiate(cifar10(), cfg, nn::Domain::shift, 1);
  CHECK(net->reductions() == std::vector<int>{1, 3});
  for (const auto& cell : net->cells()) {
    const auto w = cell.wiring();
    CHECK(w.size() == 4);
    for (std::size_t j = 0; j < w.size(); ++j) {
      CHECK(w[j][0] < static_cast<int>(j) + 2);
      CHECK(w[j][1] < static_cast<int>(j) + 2);
    }
  }
  nn::ParamRefs refs;
  net->collect(refs, "");
  CHECK(refs.weight_count() == structural_count(cifar10(), cfg, net->reductions()));
  auto net100 = instantiate(cifar100(), cfg, nn::Domain::real, 1);
  nn::ParamRefs r100;
  net100->collect(r100, "");
  CHECK(r100.weight_count() == structural_count(cifar100(), cfg, net100->reductions()));
  CHECK(r100.shift.empty());
}

TEST_CASE("instantiate is deterministic and the fixed path multiplies no weights") {
  const NetworkConfig cfg{.cells = 3, .channels = 4, .in_channels = 1, .classes = 4};
  auto a = instantiate(cifar10(), cfg, nn::Domain::shift, 9);
  auto b = instantiate(cifar10(), cfg, nn::Domain::shift, 9);
  nn::ParamRefs ra, rb;
  a->collect(ra, "");
  b->collect(rb, "");
  REQUIRE(ra.shift.size() == rb.shift.size());
  for (std::size_t i = 0; i < ra.shift.size(); ++i) CHECK(ra.shift[i].second->P.value.data == rb.shift[i].second->P.value.data);

  std::mt19937_64 rng(2);
  Parameter x(gradcheck::random_tensor({2, 1, 12, 12}, rng));
  nn::Context ctx;
  CHECK(a->forward(nn::leaf(x), ctx)->value.shape == Shape{2, 4});
  nn::freeze_all(*a);
  const auto before = nn::op_counters().snapshot();
  const FixedTensor y = a->infer(to_fixed(x.value));
  const auto d = nn::op_counters().snapshot() - before;
  CHECK(y.shape == Shape{2, 4});
  CHECK(d.weight_muls == 0);
  CHECK(d.real_weight_reads == 0);
  CHECK(d.shifts > 0);
}
