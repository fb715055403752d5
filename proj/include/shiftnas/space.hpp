// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "shiftnas/nn/layers.hpp"

namespace shiftnas::space {

using nn::Context;
using nn::Domain;
using nn::ModulePtr;
using nn::ParamRefs;
using nn::Rng;
using nn::Var;

// Global operation order. The first four form the convolution group O_c,
// the last four the topology group O_t.
enum class OpKind : int {
  sep_conv_3x3 = 0,
  sep_conv_5x5,
  dil_conv_3x3,
  dil_conv_5x5,
  max_pool_3x3,
  avg_pool_3x3,
  skip_connect,
  zero,
};

inline constexpr int kNumOps = 8;
inline constexpr int kGroupSize = 4;

enum class Group { conv, topo };

inline constexpr std::array<OpKind, kGroupSize> kConvOps = {OpKind::sep_conv_3x3, OpKind::sep_conv_5x5,
                                                           OpKind::dil_conv_3x3, OpKind::dil_conv_5x5};
inline constexpr std::array<OpKind, kGroupSize> kTopoOps = {OpKind::max_pool_3x3, OpKind::avg_pool_3x3,
                                                           OpKind::skip_connect, OpKind::zero};

std::string_view op_name(OpKind k);
// Throws std::invalid_argument for an unknown name.
OpKind op_from_name(std::string_view name);
Group group_of(OpKind k);
int index_in_group(OpKind k);
const std::array<OpKind, kGroupSize>& group_ops(Group g);
bool has_shift_weights(OpKind k);

// Builds one candidate operation. In search mode pooling is followed by a
// non-affine BN so its scale matches the convolution candidates.
ModulePtr make_op(OpKind k, int channels, int stride, Domain d, bool affine, bool search_mode, Rng& rng);

// Edge layout inside a cell: intermediate node j (0-based) receives edges
// from states 0 .. j+1; its edges are contiguous starting at edge_offset(j).
int edge_offset(int node);
int num_edges(int nodes);
inline int node_arity(int node) { return node + 2; }

// Candidate operations of one edge, partitioned into consecutive groups.
class MixedOp {
 public:
  MixedOp(int channels, int stride, Domain d, Rng& rng);

  // weights[g] holds the relaxation weights of group g (one per candidate).
  Var forward(const Var& x, const Context& ctx, const std::vector<Var>& weights);
  void collect(ParamRefs& out, const std::string& prefix);

  // Keep only `keep` (in that order) as a single group.
  void prune(const std::vector<OpKind>& keep);

  const std::vector<OpKind>& kinds() const { return kinds_; }
  const std::vector<int>& group_sizes() const { return group_sizes_; }

 private:
  std::vector<OpKind> kinds_;
  std::vector<ModulePtr> ops_;
  std::vector<int> group_sizes_;
};

// Relaxation weights for every edge of one cell type.
struct CellWeights {
  std::vector<std::vector<Var>> edge;  // [edge][group]
  std::vector<Var> node_gamma;         // per-node edge importances; empty = plain sum
};

class SearchCell {
 public:
  SearchCell(Domain d, int nodes, int c_pp, int c_p, int c, bool reduction, bool reduction_prev, Rng& rng);

  Var forward(const Var& s0, const Var& s1, const Context& ctx, const CellWeights& w);
  void collect(ParamRefs& out, const std::string& prefix);

  bool reduction() const { return reduction_; }
  int nodes() const { return nodes_; }
  std::vector<MixedOp>& edges() { return edges_; }

 private:
  int nodes_;
  bool reduction_;
  ModulePtr pre0_, pre1_;
  std::vector<MixedOp> edges_;
};

struct SupernetConfig {
  int cells = 5;
  int channels = 8;
  int nodes = 4;
  std::vector<int> reductions;  // empty: cells/3 and 2*cells/3
  int in_channels = 3;
  int classes = 2;
  int stem_multiplier = 3;
};

// Reduction positions after defaulting; throws for invalid positions.
std::vector<int> resolve_reductions(const SupernetConfig& cfg);

class Supernet {
 public:
  Supernet(const SupernetConfig& cfg, Domain d, Rng& rng);

  // x: [N, in_channels, H, W] -> logits [N, classes]
  Var forward(const Var& x, const Context& ctx, const CellWeights& normal, const CellWeights& reduce);
  ParamRefs params();

  const SupernetConfig& config() const { return cfg_; }
  const std::vector<int>& reductions() const { return reductions_; }
  std::vector<SearchCell>& cells() { return cells_; }

 private:
  SupernetConfig cfg_;
  std::vector<int> reductions_;
  nn::Sequential stem_;
  std::vector<SearchCell> cells_;
  std::unique_ptr<nn::Conv2d> classifier_;
};

// Final classifier shared by supernets and derived networks:
// global average pool, then a 1x1 shift/real convolution with bias.
std::unique_ptr<nn::Conv2d> make_classifier(Domain d, int channels, int classes, Rng& rng);
Var classify(nn::Conv2d& head, const Var& features, const Context& ctx);

}  // namespace shiftnas::space
