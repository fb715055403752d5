// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "shiftnas/dataset.hpp"
#include "shiftnas/genotype.hpp"
#include "shiftnas/nn/optim.hpp"
#include "shiftnas/space.hpp"

namespace shiftnas::search {

using nn::Var;
using space::OpKind;

// ---------------------------------------------------------------------------
// Topology algebra. A node with n incoming edges (local indices 0..n-1) has
// C(n, 2) candidate edge pairs, ordered lexicographically.

std::vector<std::array<int, 2>> edge_pairs(int n);

// softmax(logits / T). Throws std::invalid_argument for T <= 0.
std::vector<double> topo_softmax(std::span<const double> logits, double T);

// gamma[e] = sum over pairs c containing e of beta[c] / 2.
std::vector<double> edge_importance(std::span<const double> beta, int n);

// [n, C(n,2)] matrix M with gamma = M * beta.
Tensor pair_matrix(int n);
Var edge_importance(const Var& beta, int n);

// ---------------------------------------------------------------------------
// Schedules, over fractional epochs t.

// T0 * theta^t with theta = (T_end / T0)^(1 / epochs).
struct TemperatureSchedule {
  double T0 = 10.0;
  double T_end = 0.02;
  int epochs = 40;

  double theta() const;
  double operator()(double t) const;
};

// Cosine annealing from eta0 to 0 over phase 1, then (reset = true) again
// from eta0 to 0 over phase 2. reset = false anneals once over both phases.
struct LrSchedule {
  double eta0 = 0.01;
  int phase1_epochs = 30;
  int phase2_epochs = 40;
  bool reset = true;

  double operator()(double t) const;
};

// ---------------------------------------------------------------------------
// Architecture parameters.

// Index of the largest value; ties go to the lowest index. `skip` (if >= 0) is never returned.
int argmax_first(std::span<const double> v, int skip = -1);

struct GroupChoice {
  OpKind topo;
  OpKind conv;
};
// Argmax per group; zero is excluded from the topology group.
GroupChoice select_group_ops(std::span<const double> alpha_conv, std::span<const double> alpha_topo);

// Architecture logits of one cell type.
struct CellArch {
  int nodes = 4;
  std::vector<Parameter> alpha_conv;  // [edge] 4 logits (phase 1)
  std::vector<Parameter> alpha_topo;  // [edge] 4 logits (phase 1)
  std::vector<std::array<OpKind, 2>> survivors;  // [edge] (o_t, o_c) after pruning
  std::vector<Parameter> alpha_pair;  // [edge] 2 logits over survivors (phase 2)
  std::vector<Parameter> beta;        // [node] C(n, 2) logits (phase 2)

  explicit CellArch(int nodes = 4);
  bool pruned() const { return !survivors.empty(); }
  std::vector<Parameter*> params();
};

struct ArchState {
  CellArch normal;
  CellArch reduce;
  explicit ArchState(int nodes = 4) : normal(nodes), reduce(nodes) {}
  std::vector<Parameter*> params() {
    auto a = normal.params(), b = reduce.params();
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }
};

// Prunes every edge of the arch and the supernet to O_N = (o_t, o_c); both
// survivor logits start at 0 and beta starts uniform.
void prune_to_survivors(ArchState& arch, space::Supernet& net);

// Relaxation weights for the supernet. Phase 2 also yields per-node edge
// importances at temperature T.
space::CellWeights phase1_weights(CellArch& arch);
space::CellWeights phase2_weights(CellArch& arch, double T);

// Per node: argmax pair of beta, then the argmax survivor on each chosen edge.
genotype::Genotype derive_architecture(const ArchState& arch);

// Largest relaxation weight of skip_connect over all edges.
double max_skip_fraction(const ArchState& arch);

// ---------------------------------------------------------------------------
// Losses.

enum class RegKind { modified, conventional, none };
RegKind reg_from_string(const std::string& s);

// L + (lambda/2) sum (2^P sign(S))^2 (modified), L + (lambda/2) sum (P^2 + S^2)
// (conventional) or L.
Var regularized_loss(const Var& L, const std::vector<shift::ShiftParam*>& params, double lambda,
                     RegKind kind = RegKind::modified);

// ---------------------------------------------------------------------------
// Search loop.

struct SearchConfig {
  space::SupernetConfig net;
  nn::Domain domain = nn::Domain::shift;
  nn::ShiftOptions shift;
  int phase1_epochs = 5;
  int phase2_epochs = 5;
  int batch_size = 32;
  nn::AdamConfig w_opt{.lr = 0.01, .weight_decay = 3e-4, .rectified = true};
  nn::AdamConfig arch_opt{.lr = 3e-4, .beta1 = 0.5, .weight_decay = 1e-3};
  bool lr_reset = true;
  double lambda = 3e-4;
  RegKind reg = RegKind::modified;
  double T0 = 10.0;
  double T_end = 0.02;
  std::uint64_t seed = 0;
};

struct MetricRow {
  int epoch = 0;
  int phase = 1;
  double lr = 0.0;
  double T = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double max_alpha_skip_fraction = 0.0;
};

struct SearchResult {
  genotype::Genotype genotype;
  std::vector<MetricRow> metrics;
};

// Everything the two phases mutate.
struct SearchState {
  SearchConfig cfg;
  space::Supernet net;
  ArchState arch;
  nn::Adam w_opt;
  nn::Adam arch_opt;
  int phase = 1;

  explicit SearchState(const SearchConfig& cfg);
  nn::Context train_ctx() const { return {.training = true, .shift = cfg.shift}; }
  // Switches to phase 2: prunes, re-creates the architecture optimizer.
  void enter_phase2();
};

// One first-order alternating update: w on the train batch (regularized),
// then the phase-1 logits on the val batch. Returns the train loss.
double bilevel_step(SearchState& s, const Dataset& train, std::span<const std::size_t> train_idx, const Dataset& val,
                    std::span<const std::size_t> val_idx);

// One joint update of w, survivor logits and beta at temperature T.
double one_level_step(SearchState& s, const Dataset& data, std::span<const std::size_t> idx, double T);

// Loss and accuracy with running BN statistics (no graph).
std::pair<double, double> evaluate(SearchState& s, const Dataset& data, double T, std::size_t batch = 64);

using EpochCallback = std::function<void(const MetricRow&)>;

// Runs both phases. `search_set` is halved for phase 1 and used whole in
// phase 2; `heldout` only feeds the metrics. Throws std::runtime_error if the
// loss diverges.
SearchResult run_search(const SearchConfig& cfg, const Dataset& search_set, const Dataset& heldout,
                        const EpochCallback& on_epoch = {});

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

}  // namespace shiftnas::search
