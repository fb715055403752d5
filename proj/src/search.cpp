// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace shiftnas::search {

std::vector<std::array<int, 2>> edge_pairs(int n) {
  if (n < 2) throw std::invalid_argument("edge_pairs: a node needs at least 2 incoming edges");
  std::vector<std::array<int, 2>> out;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) out.push_back({a, b});
  return out;
}

std::vector<double> topo_softmax(std::span<const double> logits, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("topo_softmax: temperature must be positive");
  if (logits.empty()) return {};
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += out[i] = std::exp((logits[i] - mx) / T);
  for (double& v : out) v /= z;
  return out;
}

std::vector<double> edge_importance(std::span<const double> beta, int n) {
  const auto pairs = edge_pairs(n);
  if (beta.size() != pairs.size()) throw std::invalid_argument("edge_importance: beta size does not match C(n, 2)");
  std::vector<double> gamma(static_cast<std::size_t>(n), 0.0);
  for (std::size_t c = 0; c < pairs.size(); ++c)
    for (int e : pairs[c]) gamma[static_cast<std::size_t>(e)] += beta[c] / 2.0;
  return gamma;
}

Tensor pair_matrix(int n) {
  const auto pairs = edge_pairs(n);
  const int P = static_cast<int>(pairs.size());
  Tensor m({n, P});
  for (int c = 0; c < P; ++c)
    for (int e : pairs[static_cast<std::size_t>(c)]) m[static_cast<std::size_t>(e * P + c)] = 0.5;
  return m;
}

Var edge_importance(const Var& beta, int n) { return nn::matvec(pair_matrix(n), beta); }

// ---------------------------------------------------------------------------

double TemperatureSchedule::theta() const {
  if (epochs <= 0) throw std::invalid_argument("temperature schedule needs at least one epoch");
  if (!(T0 > 0.0) || !(T_end > 0.0)) throw std::invalid_argument("temperatures must be positive");
  return std::pow(T_end / T0, 1.0 / epochs);
}

double TemperatureSchedule::operator()(double t) const {
  if (t < 0.0) throw std::invalid_argument("temperature: t must be >= 0");
  return T0 * std::pow(theta(), t);
}

double LrSchedule::operator()(double t) const {
  const double total = phase1_epochs + phase2_epochs;
  if (t < 0.0 || t > total) throw std::out_of_range("lr_schedule: epoch outside [0, total]");
  auto cosine = [&](double x, double span) { return span > 0 ? eta0 * 0.5 * (1.0 + std::cos(std::numbers::pi * x / span)) : eta0; };
  if (!reset) return cosine(t, total);
  if (t < phase1_epochs) return cosine(t, phase1_epochs);
  return cosine(t - phase1_epochs, phase2_epochs);
}

// ---------------------------------------------------------------------------

int argmax_first(std::span<const double> v, int skip) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(v.size()); ++i) {
    if (i == skip) continue;
    if (best < 0 || v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  }
  if (best < 0) throw std::invalid_argument("argmax over an empty set");
  return best;
}

GroupChoice select_group_ops(std::span<const double> alpha_conv, std::span<const double> alpha_topo) {
  if (alpha_conv.size() != space::kGroupSize || alpha_topo.size() != space::kGroupSize)
    throw std::invalid_argument("select_group_ops: expected 4 logits per group");
  const int zero = space::index_in_group(OpKind::zero);
  return {space::kTopoOps[static_cast<std::size_t>(argmax_first(alpha_topo, zero))],
          space::kConvOps[static_cast<std::size_t>(argmax_first(alpha_conv))]};
}

CellArch::CellArch(int n) : nodes(n) {
  const int E = space::num_edges(n);
  for (int e = 0; e < E; ++e) {
    alpha_conv.emplace_back(Tensor({space::kGroupSize}));
    alpha_topo.emplace_back(Tensor({space::kGroupSize}));
  }
}

std::vector<Parameter*> CellArch::params() {
  std::vector<Parameter*> out;
  if (pruned()) {
    for (auto& p : alpha_pair) out.push_back(&p);
    for (auto& p : beta) out.push_back(&p);
  } else {
    for (auto& p : alpha_conv) out.push_back(&p);
    for (auto& p : alpha_topo) out.push_back(&p);
  }
  return out;
}

namespace {
void prune_cell_arch(CellArch& a) {
  a.survivors.clear();
  a.alpha_pair.clear();
  a.beta.clear();
  for (std::size_t e = 0; e < a.alpha_conv.size(); ++e) {
    const GroupChoice c = select_group_ops(a.alpha_conv[e].value.data, a.alpha_topo[e].value.data);
    a.survivors.push_back({c.topo, c.conv});
    a.alpha_pair.emplace_back(Tensor({2}));
  }
  for (int j = 0; j < a.nodes; ++j) {
    const int n = space::node_arity(j);
    a.beta.emplace_back(Tensor({n * (n - 1) / 2}));
  }
}

}  // namespace

void prune_to_survivors(ArchState& arch, space::Supernet& net) {
  prune_cell_arch(arch.normal);
  prune_cell_arch(arch.reduce);
  for (auto& cell : net.cells()) {
    const CellArch& a = cell.reduction() ? arch.reduce : arch.normal;
    auto& edges = cell.edges();
    if (edges.size() != a.survivors.size()) throw std::logic_error("prune: supernet and architecture disagree");
    for (std::size_t e = 0; e < edges.size(); ++e) edges[e].prune({a.survivors[e][0], a.survivors[e][1]});
  }
}

space::CellWeights phase1_weights(CellArch& arch) {
  space::CellWeights w;
  for (std::size_t e = 0; e < arch.alpha_conv.size(); ++e)
    w.edge.push_back({nn::softmax(nn::leaf(arch.alpha_conv[e])), nn::softmax(nn::leaf(arch.alpha_topo[e]))});
  return w;
}

space::CellWeights phase2_weights(CellArch& arch, double T) {
  if (!arch.pruned()) throw std::logic_error("phase2_weights: architecture not pruned yet");
  space::CellWeights w;
  for (auto& p : arch.alpha_pair) w.edge.push_back({nn::softmax(nn::leaf(p))});
  for (int j = 0; j < arch.nodes; ++j)
    w.node_gamma.push_back(edge_importance(nn::softmax(nn::leaf(arch.beta[static_cast<std::size_t>(j)]), T), space::node_arity(j)));
  return w;
}

namespace {
std::vector<genotype::NodeGenes> derive_cell(const CellArch& a) {
  if (!a.pruned()) throw std::logic_error("derive_architecture: topology phase has not started");
  std::vector<genotype::NodeGenes> nodes;
  for (int j = 0; j < a.nodes; ++j) {
    const auto pairs = edge_pairs(space::node_arity(j));
    const auto& pair = pairs[static_cast<std::size_t>(argmax_first(a.beta[static_cast<std::size_t>(j)].value.data))];
    genotype::NodeGenes genes{};
    for (std::size_t k = 0; k < 2; ++k) {
      const auto e = static_cast<std::size_t>(space::edge_offset(j) + pair[k]);
      const int pick = argmax_first(a.alpha_pair[e].value.data);
      genes[k] = {a.survivors[e][static_cast<std::size_t>(pick)], pair[k]};
    }
    nodes.push_back(genes);
  }
  return nodes;
}

double softmax_at(const Tensor& logits, std::size_t i) { return topo_softmax(logits.data, 1.0)[i]; }
}  // namespace

genotype::Genotype derive_architecture(const ArchState& arch) {
  genotype::Genotype g;
  g.normal = derive_cell(arch.normal);
  g.reduce = derive_cell(arch.reduce);
  g.normal_concat = genotype::default_concat(arch.normal.nodes);
  g.reduce_concat = genotype::default_concat(arch.reduce.nodes);
  return g;
}

double max_skip_fraction(const ArchState& arch) {
  double best = 0.0;
  const auto skip = static_cast<std::size_t>(space::index_in_group(OpKind::skip_connect));
  for (const CellArch* a : {&arch.normal, &arch.reduce}) {
    if (a->pruned()) {
      for (std::size_t e = 0; e < a->survivors.size(); ++e)
        if (a->survivors[e][0] == OpKind::skip_connect) best = std::max(best, softmax_at(a->alpha_pair[e].value, 0));
    } else {
      for (const auto& p : a->alpha_topo) best = std::max(best, softmax_at(p.value, skip));
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

RegKind reg_from_string(const std::string& s) {
  if (s == "modified") return RegKind::modified;
  if (s == "conventional") return RegKind::conventional;
  if (s == "none") return RegKind::none;
  throw std::invalid_argument("unknown regularizer '" + s + "' (expected modified, conventional or none)");
}

Var regularized_loss(const Var& L, const std::vector<shift::ShiftParam*>& params, double lambda, RegKind kind) {
  if (lambda < 0.0) throw std::invalid_argument("regularized_loss: lambda must be >= 0");
  switch (kind) {
    case RegKind::modified: return nn::add(L, nn::shift_weight_l2(params, lambda));
    case RegKind::conventional: return nn::add(L, nn::raw_l2(params, lambda));
    case RegKind::none: break;
  }
  return L;
}

// ---------------------------------------------------------------------------

namespace {
space::Supernet build_supernet(const SearchConfig& cfg) {
  space::Rng rng(cfg.seed);
  return space::Supernet(cfg.net, cfg.domain, rng);
}

void zero_all(std::vector<Parameter*> ps) {
  for (auto* p : ps) p->zero_grad();
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::runtime_error(std::string(what) + " is not finite");
}
}  // namespace

SearchState::SearchState(const SearchConfig& c)
    : cfg(c),
      net(build_supernet(c)),
      arch(c.net.nodes),
      w_opt(c.w_opt, net.params().real_params(), {}, net.params().shift_params()),
      arch_opt(c.arch_opt, arch.params()) {}

void SearchState::enter_phase2() {
  if (phase == 2) return;
  prune_to_survivors(arch, net);
  arch_opt = nn::Adam(cfg.arch_opt, arch.params());
  // Pruning dropped modules, so the weight optimizer must forget them too.
  auto refs = net.params();
  w_opt = nn::Adam(cfg.w_opt, refs.real_params(), {}, refs.shift_params());
  phase = 2;
}

double bilevel_step(SearchState& s, const Dataset& train, std::span<const std::size_t> train_idx, const Dataset& val,
                    std::span<const std::size_t> val_idx) {
  if (s.phase != 1) throw std::logic_error("bilevel_step: only valid during operation search");
  if (train_idx.empty() || val_idx.empty()) throw std::invalid_argument("bilevel_step: empty batch");
  const nn::Context ctx = s.train_ctx();
  const auto shift_params = s.net.params().shift_params();

  s.w_opt.zero_grad();
  zero_all(s.arch.params());
  {
    const auto labels = train.gather_labels(train_idx);
    const Var logits = s.net.forward(nn::constant(train.gather(train_idx)), ctx, phase1_weights(s.arch.normal),
                                     phase1_weights(s.arch.reduce));
    const Var L = nn::cross_entropy(logits, labels);
    require_finite(L->value[0], "training loss");
    nn::backward(regularized_loss(L, shift_params, s.cfg.lambda, s.cfg.reg));
    s.w_opt.step();
    s.w_opt.zero_grad();
    zero_all(s.arch.params());
    const double train_loss = L->value[0];

    const auto vlabels = val.gather_labels(val_idx);
    const Var vlogits = s.net.forward(nn::constant(val.gather(val_idx)), ctx, phase1_weights(s.arch.normal),
                                      phase1_weights(s.arch.reduce));
    const Var Lv = nn::cross_entropy(vlogits, vlabels);
    require_finite(Lv->value[0], "validation loss");
    nn::backward(Lv);
    s.arch_opt.step();
    s.w_opt.zero_grad();
    return train_loss;
  }
}

double one_level_step(SearchState& s, const Dataset& data, std::span<const std::size_t> idx, double T) {
  if (s.phase != 2) throw std::logic_error("one_level_step: only valid during topology search");
  if (idx.empty()) throw std::invalid_argument("one_level_step: empty batch");
  const auto shift_params = s.net.params().shift_params();
  s.w_opt.zero_grad();
  zero_all(s.arch.params());
  const Var logits = s.net.forward(nn::constant(data.gather(idx)), s.train_ctx(), phase2_weights(s.arch.normal, T),
                                   phase2_weights(s.arch.reduce, T));
  const Var L = nn::cross_entropy(logits, data.gather_labels(idx));
  require_finite(L->value[0], "training loss");
  nn::backward(regularized_loss(L, shift_params, s.cfg.lambda, s.cfg.reg));
  s.w_opt.step();
  s.arch_opt.step();
  return L->value[0];
}

std::pair<double, double> evaluate(SearchState& s, const Dataset& data, double T, std::size_t batch) {
  nn::NoGradGuard guard;
  const nn::Context ctx{.training = false, .shift = s.cfg.shift};
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& idx : make_batches(data.size(), batch, nullptr)) {
    const auto labels = data.gather_labels(idx);
    const Var logits = s.phase == 1 ? s.net.forward(nn::constant(data.gather(idx)), ctx, phase1_weights(s.arch.normal),
                                                    phase1_weights(s.arch.reduce))
                                    : s.net.forward(nn::constant(data.gather(idx)), ctx, phase2_weights(s.arch.normal, T),
                                                    phase2_weights(s.arch.reduce, T));
    loss += nn::cross_entropy(logits, labels)->value[0] * static_cast<double>(idx.size());
    const int K = logits->value.dim(1);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto row = std::span<const double>(logits->value.data).subspan(i * static_cast<std::size_t>(K), static_cast<std::size_t>(K));
      if (argmax_first(row) == labels[i]) ++correct;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, data.size()));
  return {loss / n, static_cast<double>(correct) / n};
}

SearchResult run_search(const SearchConfig& cfg, const Dataset& search_set, const Dataset& heldout,
                        const EpochCallback& on_epoch) {
  search_set.check();
  if (search_set.size() < 2) throw std::invalid_argument("search: need at least 2 samples");
  if (cfg.phase1_epochs < 0 || cfg.phase2_epochs < 0) throw std::invalid_argument("search: negative epoch count");
  if (cfg.batch_size <= 0) throw std::invalid_argument("search: batch size must be positive");

  SearchState s(cfg);
  SearchResult result;
  std::mt19937_64 rng(cfg.seed ^ 0x5eed5eedULL);
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const auto [d_train, d_val] = split(search_set, search_set.size() / 2, cfg.seed + 1);
  const Dataset& metric_set = heldout.size() ? heldout : d_val;
  const LrSchedule lr{cfg.w_opt.lr, cfg.phase1_epochs, cfg.phase2_epochs, cfg.lr_reset};
  const TemperatureSchedule temp{cfg.T0, cfg.T_end, std::max(1, cfg.phase2_epochs)};

  auto finish_epoch = [&](int epoch, int phase, double lr_start, double T, double train_loss) {
    MetricRow row{epoch, phase, lr_start, T, train_loss, 0.0, 0.0, 0.0};
    std::tie(row.val_loss, row.val_acc) = evaluate(s, metric_set, T);
    row.max_alpha_skip_fraction = max_skip_fraction(s.arch);
    result.metrics.push_back(row);
    if (on_epoch) on_epoch(row);
  };
  auto diverged = [&](int phase, int epoch, std::size_t step, double at_lr, const std::exception& e) {
    return std::runtime_error("search diverged in phase " + std::to_string(phase) + ", epoch " + std::to_string(epoch) +
                              ", step " + std::to_string(step) + " (lr " + std::to_string(at_lr) + "): " + e.what() +
                              "; try a smaller learning rate");
  };

  for (int epoch = 0; epoch < cfg.phase1_epochs; ++epoch) {
    const auto bt = make_batches(d_train.size(), bs, &rng);
    const auto bv = make_batches(d_val.size(), bs, &rng);
    double total = 0.0;
    for (std::size_t b = 0; b < bt.size(); ++b) {
      const double at_lr = lr(epoch + static_cast<double>(b) / static_cast<double>(bt.size()));
      s.w_opt.set_lr(at_lr);
      try {
        total += bilevel_step(s, d_train, bt[b], d_val, bv[b % bv.size()]);
      } catch (const std::runtime_error& e) {
        throw diverged(1, epoch, b, at_lr, e);
      }
    }
    finish_epoch(epoch, 1, lr(epoch), cfg.T0, total / static_cast<double>(bt.size()));
  }

  s.enter_phase2();
  for (int e2 = 0; e2 < cfg.phase2_epochs; ++e2) {
    const int epoch = cfg.phase1_epochs + e2;
    const auto batches = make_batches(search_set.size(), bs, &rng);
    double total = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const double frac = static_cast<double>(b) / static_cast<double>(batches.size());
      const double at_lr = lr(epoch + frac);
      s.w_opt.set_lr(at_lr);
      try {
        total += one_level_step(s, search_set, batches[b], temp(e2 + frac));
      } catch (const std::runtime_error& e) {
        throw diverged(2, epoch, b, at_lr, e);
      }
    }
    finish_epoch(epoch, 2, lr(epoch), temp(e2), total / static_cast<double>(batches.size()));
  }

  result.genotype = derive_architecture(s.arch);
  return result;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write metrics to " + path.string());
  os << "epoch,phase,lr,T,train_loss,val_loss,val_acc,max_alpha_skip_fraction\n";
  os.precision(10);
  for (const auto& r : rows)
    os << r.epoch << ',' << (r.phase == 1 ? "operation" : "topology") << ',' << r.lr << ',' << r.T << ','
       << r.train_loss << ',' << r.val_loss << ',' << r.val_acc << ',' << r.max_alpha_skip_fraction << '\n';
}

}  // namespace shiftnas::search
