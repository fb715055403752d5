// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "shiftnas/space.hpp"

// Genotype JSON schema:
//
//   {
//     "normal":        [[[op, pred], [op, pred]], ...],   one entry per intermediate node
//     "normal_concat": [2, 3, 4, 5],                      cell states feeding the output
//     "reduce":        [...],
//     "reduce_concat": [...]
//   }
//
// States 0 and 1 are the cell inputs; intermediate node k (1-based) is state
// k + 1 and may only read states 0 .. k. Op names come from the candidate
// vocabulary without "zero". The two entries of a node read different states.

namespace shiftnas::genotype {

struct Entry {
  space::OpKind op;
  int pred;
  bool operator==(const Entry&) const = default;
};

using NodeGenes = std::array<Entry, 2>;

struct Genotype {
  std::vector<NodeGenes> normal;
  std::vector<int> normal_concat;
  std::vector<NodeGenes> reduce;
  std::vector<int> reduce_concat;
  bool operator==(const Genotype&) const = default;
};

// Throws std::invalid_argument describing the first violated rule.
void validate(const Genotype& g);

std::string serialize(const Genotype& g);
Genotype parse(const std::string& json_text);
// Tabular listing: cell, node, "('op', pred), ('op', pred)".
std::string pretty(const Genotype& g);

std::vector<int> default_concat(int nodes);

// Published best cells.
Genotype cifar10();
Genotype cifar100();

struct NetworkConfig {
  int cells = 8;
  int channels = 16;
  std::vector<int> reductions;  // empty: cells/3 and 2*cells/3
  int in_channels = 3;
  int classes = 10;
  int stem_multiplier = 3;
};

class Cell {
 public:
  Cell(const std::vector<NodeGenes>& genes, const std::vector<int>& concat, space::Domain d, int c_pp, int c_p, int c,
       bool reduction, bool reduction_prev, space::Rng& rng);

  space::Var forward(const space::Var& s0, const space::Var& s1, const space::Context& ctx);
  FixedTensor infer(const FixedTensor& s0, const FixedTensor& s1) const;
  void collect(space::ParamRefs& out, const std::string& prefix);

  bool reduction() const { return reduction_; }
  int out_channels() const { return out_channels_; }
  // Node inputs actually wired, for structural checks.
  std::vector<std::array<int, 2>> wiring() const;

 private:
  std::vector<NodeGenes> genes_;
  std::vector<int> concat_;
  bool reduction_;
  int out_channels_;
  space::ModulePtr pre0_, pre1_;
  std::vector<space::ModulePtr> ops_;  // two per node
};

// A genotype stacked into a trainable network with a fixed-point inference path.
class Network final : public nn::Module {
 public:
  Network(const Genotype& g, const NetworkConfig& cfg, space::Domain d, space::Rng& rng);

  space::Var forward(const space::Var& x, const space::Context& ctx) override;  // -> [N, classes]
  FixedTensor infer(const FixedTensor& x) const override;                       // -> [N, classes]
  void collect(space::ParamRefs& out, const std::string& prefix) override;

  space::Domain domain() const { return domain_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<int>& reductions() const { return reductions_; }

 private:
  space::Domain domain_;
  std::vector<int> reductions_;
  nn::Sequential stem_;
  std::vector<Cell> cells_;
  std::unique_ptr<nn::Conv2d> classifier_;
};

std::unique_ptr<Network> instantiate(const Genotype& g, const NetworkConfig& cfg, space::Domain d, std::uint64_t seed);

}  // namespace shiftnas::genotype
