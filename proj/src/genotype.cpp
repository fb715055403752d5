// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/genotype.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace shiftnas::genotype {

using space::OpKind;

namespace {

void validate_cell(const std::vector<NodeGenes>& nodes, const std::vector<int>& concat, const char* which) {
  const std::string cell(which);
  if (nodes.empty()) throw std::invalid_argument(cell + " cell has no nodes");
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const int limit = static_cast<int>(j) + 2;
    for (const Entry& e : nodes[j]) {
      if (e.op == OpKind::zero)
        throw std::invalid_argument(cell + " node " + std::to_string(j + 1) + ": 'zero' is not a selectable operation");
      if (e.pred < 0 || e.pred >= limit)
        throw std::invalid_argument(cell + " node " + std::to_string(j + 1) + ": predecessor " + std::to_string(e.pred) +
                                    " outside [0, " + std::to_string(limit) + ")");
    }
    if (nodes[j][0].pred == nodes[j][1].pred)
      throw std::invalid_argument(cell + " node " + std::to_string(j + 1) + ": both inputs read state " +
                                  std::to_string(nodes[j][0].pred));
  }
  if (concat.empty()) throw std::invalid_argument(cell + " concat is empty");
  const int states = static_cast<int>(nodes.size()) + 2;
  for (std::size_t i = 0; i < concat.size(); ++i) {
    if (concat[i] < 2 || concat[i] >= states)
      throw std::invalid_argument(cell + " concat state " + std::to_string(concat[i]) + " is not an intermediate node");
    for (std::size_t k = 0; k < i; ++k)
      if (concat[k] == concat[i]) throw std::invalid_argument(cell + " concat lists a state twice");
  }
}

nlohmann::json cell_to_json(const std::vector<NodeGenes>& nodes) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& node : nodes) {
    nlohmann::json pair = nlohmann::json::array();
    for (const Entry& e : node) pair.push_back({std::string(space::op_name(e.op)), e.pred});
    out.push_back(pair);
  }
  return out;
}

std::vector<NodeGenes> cell_from_json(const nlohmann::json& j, const char* which) {
  if (!j.is_array()) throw std::invalid_argument(std::string(which) + " must be an array of nodes");
  std::vector<NodeGenes> nodes;
  for (const auto& node : j) {
    if (!node.is_array() || node.size() != 2)
      throw std::invalid_argument(std::string(which) + ": every node needs exactly 2 (op, predecessor) entries");
    NodeGenes genes{};
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& e = node[k];
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_number_integer())
        throw std::invalid_argument(std::string(which) + ": entries must be [op_name, predecessor]");
      genes[k] = {space::op_from_name(e[0].get<std::string>()), e[1].get<int>()};
    }
    nodes.push_back(genes);
  }
  return nodes;
}

std::vector<NodeGenes> table(std::initializer_list<std::array<std::pair<const char*, int>, 2>> rows) {
  std::vector<NodeGenes> out;
  for (const auto& r : rows)
    out.push_back({Entry{space::op_from_name(r[0].first), r[0].second}, Entry{space::op_from_name(r[1].first), r[1].second}});
  return out;
}

}  // namespace

void validate(const Genotype& g) {
  validate_cell(g.normal, g.normal_concat, "normal");
  validate_cell(g.reduce, g.reduce_concat, "reduce");
}

std::string serialize(const Genotype& g) {
  validate(g);
  nlohmann::json j;
  j["normal"] = cell_to_json(g.normal);
  j["normal_concat"] = g.normal_concat;
  j["reduce"] = cell_to_json(g.reduce);
  j["reduce_concat"] = g.reduce_concat;
  return j.dump(2) + "\n";
}

Genotype parse(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("genotype: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("genotype: top level must be an object");
  for (const char* key : {"normal", "normal_concat", "reduce", "reduce_concat"})
    if (!j.contains(key)) throw std::invalid_argument(std::string("genotype: missing key '") + key + "'");
  Genotype g;
  g.normal = cell_from_json(j["normal"], "normal");
  g.reduce = cell_from_json(j["reduce"], "reduce");
  try {
    g.normal_concat = j["normal_concat"].get<std::vector<int>>();
    g.reduce_concat = j["reduce_concat"].get<std::vector<int>>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("genotype: concat lists must hold integers");
  }
  validate(g);
  return g;
}

std::string pretty(const Genotype& g) {
  std::ostringstream os;
  os << "Cell       Node  Genotype\n";
  auto rows = [&](const std::vector<NodeGenes>& nodes, const char* label) {
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      os << (j == 0 ? label : "         ") << "  " << (j + 1) << "     ";
      for (std::size_t k = 0; k < 2; ++k)
        os << (k ? ", " : "") << "('" << space::op_name(nodes[j][k].op) << "', " << nodes[j][k].pred << ")";
      os << "\n";
    }
  };
  rows(g.normal, "Normal   ");
  rows(g.reduce, "Reduction");
  return os.str();
}

std::vector<int> default_concat(int nodes) {
  std::vector<int> c;
  for (int i = 0; i < nodes; ++i) c.push_back(i + 2);
  return c;
}

Genotype cifar10() {
  Genotype g;
  g.normal = table({{{{"skip_connect", 0}, {"skip_connect", 1}}},
                    {{{"sep_conv_3x3", 0}, {"sep_conv_3x3", 1}}},
                    {{{"sep_conv_3x3", 0}, {"sep_conv_3x3", 1}}},
                    {{{"sep_conv_3x3", 0}, {"dil_conv_5x5", 4}}}});
  g.reduce = table({{{{"skip_connect", 0}, {"skip_connect", 1}}},
                    {{{"sep_conv_3x3", 0}, {"max_pool_3x3", 1}}},
                    {{{"sep_conv_3x3", 0}, {"sep_conv_5x5", 1}}},
                    {{{"skip_connect", 0}, {"dil_conv_5x5", 2}}}});
  g.normal_concat = g.reduce_concat = default_concat(4);
  return g;
}

Genotype cifar100() {
  Genotype g;
  g.normal = table({{{{"sep_conv_3x3", 0}, {"skip_connect", 1}}},
                    {{{"skip_connect", 0}, {"sep_conv_3x3", 1}}},
                    {{{"sep_conv_3x3", 0}, {"sep_conv_3x3", 1}}},
                    {{{"sep_conv_3x3", 0}, {"sep_conv_5x5", 4}}}});
  g.reduce = table({{{{"max_pool_3x3", 0}, {"skip_connect", 1}}},
                    {{{"sep_conv_5x5", 0}, {"sep_conv_5x5", 1}}},
                    {{{"max_pool_3x3", 0}, {"dil_conv_5x5", 3}}},
                    {{{"sep_conv_5x5", 0}, {"sep_conv_3x3", 3}}}});
  g.normal_concat = g.reduce_concat = default_concat(4);
  return g;
}

// ---------------------------------------------------------------------------

Cell::Cell(const std::vector<NodeGenes>& genes, const std::vector<int>& concat, space::Domain d, int c_pp, int c_p,
           int c, bool reduction, bool reduction_prev, space::Rng& rng)
    : genes_(genes), concat_(concat), reduction_(reduction), out_channels_(static_cast<int>(concat.size()) * c) {
  if (reduction_prev)
    pre0_ = std::make_unique<nn::FactorizedReduce>(d, c_pp, c, true, rng);
  else
    pre0_ = nn::make_relu_conv_bn(d, c_pp, c, 1, 1, 0, true, rng);
  pre1_ = nn::make_relu_conv_bn(d, c_p, c, 1, 1, 0, true, rng);
  for (const auto& node : genes_)
    for (const Entry& e : node) ops_.push_back(space::make_op(e.op, c, reduction && e.pred < 2 ? 2 : 1, d, true, false, rng));
}

space::Var Cell::forward(const space::Var& s0, const space::Var& s1, const space::Context& ctx) {
  std::vector<space::Var> states{pre0_->forward(s0, ctx), pre1_->forward(s1, ctx)};
  for (std::size_t j = 0; j < genes_.size(); ++j)
    states.push_back(nn::add(ops_[2 * j]->forward(states[genes_[j][0].pred], ctx),
                             ops_[2 * j + 1]->forward(states[genes_[j][1].pred], ctx)));
  std::vector<space::Var> out;
  for (int s : concat_) out.push_back(states[s]);
  return nn::concat_channels(out);
}

FixedTensor Cell::infer(const FixedTensor& s0, const FixedTensor& s1) const {
  std::vector<FixedTensor> states{pre0_->infer(s0), pre1_->infer(s1)};
  for (std::size_t j = 0; j < genes_.size(); ++j)
    states.push_back(nn::fixed_add(ops_[2 * j]->infer(states[genes_[j][0].pred]),
                                   ops_[2 * j + 1]->infer(states[genes_[j][1].pred])));
  std::vector<FixedTensor> out;
  for (int s : concat_) out.push_back(states[s]);
  return nn::fixed_concat_channels(out);
}

void Cell::collect(space::ParamRefs& out, const std::string& prefix) {
  pre0_->collect(out, nn::join_name(prefix, "pre0"));
  pre1_->collect(out, nn::join_name(prefix, "pre1"));
  for (std::size_t j = 0; j < genes_.size(); ++j)
    for (std::size_t k = 0; k < 2; ++k)
      ops_[2 * j + k]->collect(out, nn::join_name(prefix, "node" + std::to_string(j + 1) + "." + std::to_string(k) + "." +
                                                              std::string(space::op_name(genes_[j][k].op))));
}

std::vector<std::array<int, 2>> Cell::wiring() const {
  std::vector<std::array<int, 2>> w;
  for (const auto& node : genes_) w.push_back({node[0].pred, node[1].pred});
  return w;
}

Network::Network(const Genotype& g, const NetworkConfig& cfg, space::Domain d, space::Rng& rng) : domain_(d) {
  validate(g);
  space::SupernetConfig shape{.cells = cfg.cells, .channels = cfg.channels, .nodes = 1, .reductions = cfg.reductions};
  reductions_ = space::resolve_reductions(shape);
  int c_curr = cfg.stem_multiplier * cfg.channels;
  stem_.add("conv", std::make_unique<nn::Conv2d>(d, cfg.in_channels, c_curr, 3, nn::ConvGeom{1, 1, 1, 1}, false, rng))
      .add("bn", std::make_unique<nn::BatchNorm2d>(c_curr, true));
  int c_pp = c_curr, c_p = c_curr;
  c_curr = cfg.channels;
  bool reduction_prev = false;
  for (int i = 0; i < cfg.cells; ++i) {
    const bool reduction = std::binary_search(reductions_.begin(), reductions_.end(), i);
    if (reduction) c_curr *= 2;
    cells_.emplace_back(reduction ? g.reduce : g.normal, reduction ? g.reduce_concat : g.normal_concat, d, c_pp, c_p,
                        c_curr, reduction, reduction_prev, rng);
    reduction_prev = reduction;
    c_pp = c_p;
    c_p = cells_.back().out_channels();
  }
  classifier_ = space::make_classifier(d, c_p, cfg.classes, rng);
}

space::Var Network::forward(const space::Var& x, const space::Context& ctx) {
  space::Var s0 = stem_.forward(x, ctx);
  space::Var s1 = s0;
  for (auto& cell : cells_) {
    space::Var next = cell.forward(s0, s1, ctx);
    s0 = s1;
    s1 = next;
  }
  return space::classify(*classifier_, s1, ctx);
}

FixedTensor Network::infer(const FixedTensor& x) const {
  FixedTensor s0 = stem_.infer(x);
  FixedTensor s1 = s0;
  for (const auto& cell : cells_) {
    FixedTensor next = cell.infer(s0, s1);
    s0 = std::move(s1);
    s1 = std::move(next);
  }
  FixedTensor logits = classifier_->infer(nn::fixed_global_avg_pool(s1));
  logits.shape = {logits.dim(0), logits.dim(1)};
  return logits;
}

void Network::collect(space::ParamRefs& out, const std::string& prefix) {
  stem_.collect(out, nn::join_name(prefix, "stem"));
  for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i].collect(out, nn::join_name(prefix, "cell" + std::to_string(i)));
  classifier_->collect(out, nn::join_name(prefix, "classifier"));
}

std::unique_ptr<Network> instantiate(const Genotype& g, const NetworkConfig& cfg, space::Domain d, std::uint64_t seed) {
  space::Rng rng(seed);
  return std::make_unique<Network>(g, cfg, d, rng);
}

}  // namespace shiftnas::genotype
