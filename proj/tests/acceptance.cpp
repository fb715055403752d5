// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. `acceptance 3 9` runs a subset.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "shiftnas/cli/commands.hpp"
#include "shiftnas/cli/config.hpp"
#include "shiftnas/cli/data.hpp"
#include "shiftnas/fxp.hpp"
#include "shiftnas/nn/checkpoint.hpp"
#include "shiftnas/nn/counters.hpp"
#include "shiftnas/search.hpp"
#include "shiftnas/shiftparam.hpp"

namespace fs = std::filesystem;
using namespace shiftnas;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path work_dir() {
  const fs::path p = fs::current_path() / "acceptance_runs";
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

// ---------------------------------------------------------------------------

Outcome shift_multiply_equivalence() {
  // x: every edge value plus a deterministic spread over the full raw range.
  std::vector<std::int32_t> xs{INT32_MIN, INT32_MIN + 1, -1, 0, 1, INT32_MAX - 1, INT32_MAX, 65536, -65536, 3, -3};
  std::uint64_t state = 0x9E3779B97F4A7C15ULL;
  while (xs.size() < 2200) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    xs.push_back(static_cast<std::int32_t>(state >> 32));
  }
  std::size_t n = 0;
  long double worst = 0;
  for (std::int32_t raw : xs)
    for (int p = -15; p <= 0; ++p)
      for (int s = -1; s <= 1; ++s) {
        const fxp::Fixed y = fxp::shift_mul(fxp::Fixed::from_raw(raw), p, fxp::to_sign(s));
        const long double exact = s * std::ldexp(static_cast<long double>(raw), p) / 65536.0L;
        worst = std::max(worst, std::abs(static_cast<long double>(y.raw()) / 65536.0L - exact));
        ++n;
      }
  const double bound = std::ldexp(1.0, -16);
  return {n >= 100000 && worst <= bound, fmt("%zu triples, max |err| = %.3g (bound %.3g)", n, double(worst), bound)};
}

// Half away from zero, written independently of the library helper.
int ref_round(double x) { return static_cast<int>(x < 0 ? -std::floor(-x + 0.5) : std::floor(x + 0.5)); }

Outcome quantization_oracle() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> up(-15.5, 0.5), us(-1.5, 1.5);
  std::size_t mismatches = 0;
  const int N = 10000;
  for (int i = 0; i < N; ++i) {
    double P = up(rng), S = us(rng);
    if (i % 10 == 0) P = -0.5 * static_cast<double>(rng() % 31);  // exact half-integers
    if (i % 10 == 1) S = 0.5 * (static_cast<int>(rng() % 7) - 3);
    const auto v = shift::quantize(shift::ShiftParam(Tensor({1}, P), Tensor({1}, S)));
    const int pq = std::clamp(ref_round(P), -15, 0);
    const int sr = ref_round(S);
    const int sq = sr > 0 ? 1 : (sr < 0 ? -1 : 0);
    const double w = sq * std::ldexp(1.0, pq);
    if (v.shift[0] != pq || fxp::to_int(v.sign[0]) != sq || v.weight[0] != w) ++mismatches;
  }
  using shift::ternary_sign;
  const bool bounds = ternary_sign(0.5) == fxp::Sign::pos && ternary_sign(-0.5) == fxp::Sign::neg &&
                      ternary_sign(std::nextafter(0.5, 0.0)) == fxp::Sign::zero &&
                      ternary_sign(std::nextafter(-0.5, 0.0)) == fxp::Sign::zero && ternary_sign(0.0) == fxp::Sign::zero &&
                      ternary_sign(1.5) == fxp::Sign::pos && ternary_sign(-1.5) == fxp::Sign::neg;
  return {mismatches == 0 && bounds,
          fmt("%d samples, %zu mismatches, +-0.5 boundaries %s", N, mismatches, bounds ? "exact" : "WRONG")};
}

Outcome backward_oracle() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> up(-15, 0), us(-1.5, 1.5), ug(-4, 4);
  double worst = 0;
  const int N = 10000;
  for (int i = 0; i < N; ++i) {
    const double P = up(rng), S = us(rng), u = ug(rng), d = ug(rng);
    const auto view = shift::quantize(shift::ShiftParam(Tensor({1}, P), Tensor({1}, S)));
    const double gp = shift::grad_P(Tensor({1}, u), Tensor({1}, d), view)[0];
    const double gs = shift::grad_S(Tensor({1}, u), Tensor({1}, d))[0];
    const int pq = std::clamp(ref_round(P), -15, 0);
    const int sr = ref_round(S);
    const long double w = (sr > 0 ? 1 : (sr < 0 ? -1 : 0)) * std::ldexp(1.0L, pq);
    const long double ref_p = static_cast<long double>(u) * d * w * std::ldexp(1.0L, pq) * std::numbers::ln2_v<long double>;
    const long double ref_s = static_cast<long double>(u) * d;
    auto rel = [](long double a, long double b) {
      return b == 0 ? double(std::abs(a)) : double(std::abs(a - b) / std::abs(b));
    };
    worst = std::max({worst, rel(gp, ref_p), rel(gs, ref_s)});
  }
  const auto fd = gradcheck::all_layers(100, 77);
  double fd_worst = 0;
  int min_probes = 1 << 30;
  std::string bad;
  for (const auto& [name, r] : fd) {
    fd_worst = std::max(fd_worst, r.max_rel);
    min_probes = std::min(min_probes, r.probes);
    if (!r.ok()) bad += " " + name;
  }
  const bool pass = worst <= 1e-12 && bad.empty() && min_probes >= 100;
  return {pass, fmt("closed forms max rel %.2g on %d scalars; finite differences on %zu layer types, >= %d probes "
                    "each, max rel %.2g%s",
                    worst, N, fd.size(), min_probes, fd_worst, bad.empty() ? "" : (" failing:" + bad).c_str())};
}

// Lexicographic index of pair (a, b) among C(n, 2).
int pair_index(int a, int b, int n) { return a * n - a * (a + 1) / 2 + (b - a - 1); }

std::vector<double> softmax1(const std::vector<double>& l) { return search::topo_softmax(l, 1.0); }

double cell_score_product(const search::CellArch& a, const std::vector<genotype::NodeGenes>& cell, bool ops) {
  double s = 1;
  for (int j = 0; j < a.nodes; ++j) {
    const int n = space::node_arity(j);
    const auto& g = cell[static_cast<std::size_t>(j)];
    if (!ops) {
      s *= softmax1(a.beta[static_cast<std::size_t>(j)].value.data)[static_cast<std::size_t>(pair_index(g[0].pred, g[1].pred, n))];
    } else {
      for (const auto& e : g) {
        const auto ei = static_cast<std::size_t>(space::edge_offset(j) + e.pred);
        const int k = a.survivors[ei][0] == e.op ? 0 : 1;
        s *= softmax1(a.alpha_pair[ei].value.data)[static_cast<std::size_t>(k)];
      }
    }
  }
  return s;
}

// Exhaustive derivation over whole cells: every pair on every node and every
// survivor on every chosen edge, ranked lexicographically by (product of pair
// probabilities, product of operation probabilities).
std::vector<genotype::NodeGenes> exhaustive_cell(const search::CellArch& a) {
  std::vector<std::vector<genotype::NodeGenes>> per_node(static_cast<std::size_t>(a.nodes));
  for (int j = 0; j < a.nodes; ++j) {
    const int n = space::node_arity(j);
    for (int x = 0; x < n; ++x)
      for (int y = x + 1; y < n; ++y)
        for (int kx = 0; kx < 2; ++kx)
          for (int ky = 0; ky < 2; ++ky) {
            const auto ex = static_cast<std::size_t>(space::edge_offset(j) + x);
            const auto ey = static_cast<std::size_t>(space::edge_offset(j) + y);
            per_node[static_cast<std::size_t>(j)].push_back(
                {genotype::Entry{a.survivors[ex][static_cast<std::size_t>(kx)], x},
                 genotype::Entry{a.survivors[ey][static_cast<std::size_t>(ky)], y}});
          }
  }
  std::vector<genotype::NodeGenes> cur(static_cast<std::size_t>(a.nodes)), best;
  double best_b = -1, best_a = -1;
  std::function<void(int)> rec = [&](int j) {
    if (j == a.nodes) {
      const double sb = cell_score_product(a, cur, false), sa = cell_score_product(a, cur, true);
      if (sb > best_b || (sb == best_b && sa > best_a)) {
        best_b = sb;
        best_a = sa;
        best = cur;
      }
      return;
    }
    for (const auto& g : per_node[static_cast<std::size_t>(j)]) {
      cur[static_cast<std::size_t>(j)] = g;
      rec(j + 1);
    }
  };
  rec(0);
  return best;
}

std::vector<double> brute_importance(const std::vector<double>& beta, int n) {
  std::vector<double> g(static_cast<std::size_t>(n), 0.0);
  for (int e = 0; e < n; ++e) {
    std::vector<int> members;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (std::popcount(mask) != 2 || !(mask & (1u << e))) continue;
      const int a = std::countr_zero(mask), b = 31 - std::countl_zero(mask);
      members.push_back(pair_index(a, b, n));
    }
    std::sort(members.begin(), members.end());
    for (int c : members) g[static_cast<std::size_t>(e)] += beta[static_cast<std::size_t>(c)] / 2.0;
  }
  return g;
}

Outcome topology_algebra() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ul(-3, 3);
  bool counts = true;
  for (int n = 2; n <= 5; ++n) {
    const auto pairs = search::edge_pairs(n);
    std::set<std::array<int, 2>> uniq(pairs.begin(), pairs.end());
    counts = counts && static_cast<int>(pairs.size()) == n * (n - 1) / 2 && uniq.size() == pairs.size();
  }
  double worst_sum = 0;
  std::size_t imp_mismatch = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + t % 4;
    std::vector<double> logits(static_cast<std::size_t>(n * (n - 1) / 2));
    for (auto& v : logits) v = ul(rng);
    const double T = std::exp(std::uniform_real_distribution<double>(std::log(0.02), std::log(10.0))(rng));
    const auto beta = search::topo_softmax(logits, T);
    const auto g = search::edge_importance(beta, n);
    double s = 0;
    for (double v : g) s += v;
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    if (g != brute_importance(beta, n)) ++imp_mismatch;
  }
  std::size_t derive_mismatch = 0;
  const std::vector<space::OpKind> topo{space::OpKind::max_pool_3x3, space::OpKind::avg_pool_3x3, space::OpKind::skip_connect};
  for (int t = 0; t < 100; ++t) {
    const int nodes = t % 2 ? 4 : 3;
    search::ArchState st(nodes);
    for (search::CellArch* a : {&st.normal, &st.reduce}) {
      for (int e = 0; e < space::num_edges(nodes); ++e) {
        a->survivors.push_back({topo[rng() % 3], space::kConvOps[rng() % 4]});
        a->alpha_pair.emplace_back(Tensor({2}, std::vector<double>{ul(rng), ul(rng)}));
      }
      for (int j = 0; j < nodes; ++j) {
        const int m = space::node_arity(j) * (space::node_arity(j) - 1) / 2;
        Tensor b({m});
        for (auto& v : b.data) v = ul(rng);
        a->beta.emplace_back(b);
      }
    }
    const auto g = search::derive_architecture(st);
    if (g.normal != exhaustive_cell(st.normal) || g.reduce != exhaustive_cell(st.reduce)) ++derive_mismatch;
  }
  const bool pass = counts && worst_sum <= 1e-6 && imp_mismatch == 0 && derive_mismatch == 0;
  return {pass, fmt("|E| = C(n,2) for n=2..5: %s; max |sum gamma - 1| = %.2g over 1000 draws; importance mismatches "
                    "%zu; derive mismatches %zu/100",
                    counts ? "yes" : "NO", worst_sum, imp_mismatch, derive_mismatch)};
}

Outcome schedules() {
  bool ok = true;
  std::string detail;
  for (int E : {40, 5}) {
    const search::TemperatureSchedule t{10.0, 0.02, E};
    const double end = t(E);
    const bool this_ok = t(0) == 10.0 && std::abs(end - 0.02) <= 1e-9 &&
                         std::abs(t.theta() - std::pow(0.002, 1.0 / E)) <= 1e-15;
    ok = ok && this_ok;
    detail += fmt("E=%d: T(0)=%.12g T(E)=%.12g theta=%.8f; ", E, t(0), end, t.theta());
  }
  for (auto [e1, e2] : {std::pair{30, 40}, std::pair{5, 5}}) {
    const search::LrSchedule lr{0.01, e1, e2, true};
    const bool this_ok = lr(0) == 0.01 && lr(e1) == 0.01 && lr(e1 + e2) <= 1e-6;
    ok = ok && this_ok;
    detail += fmt("lr %d+%d: start %.6g boundary %.6g final %.3g; ", e1, e2, lr(0), lr(e1), lr(e1 + e2));
  }
  return {ok, detail};
}

Outcome regularizer() {
  std::mt19937_64 rng(6);
  double worst_v = 0, worst_g = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double lambda = std::uniform_real_distribution<double>(1e-5, 1.0)(rng);
    shift::ShiftParam a(gradcheck::random_tensor({40}, rng, -15, 0), gradcheck::random_tensor({40}, rng, -1.5, 1.5));
    shift::ShiftParam b(gradcheck::random_tensor({3, 5}, rng, -15, 0), gradcheck::random_tensor({3, 5}, rng, -1.5, 1.5));
    a.zero_grad();
    b.zero_grad();
    Parameter base(Tensor(Shape{}, 0.0));
    const auto L = search::regularized_loss(nn::leaf(base), {&a, &b}, lambda);
    nn::backward(L);
    long double ref = 0;
    for (auto* p : {&a, &b})
      for (std::size_t i = 0; i < p->numel(); ++i) {
        const int sr = ref_round(p->S.value[i]);
        const long double s = sr > 0 ? 1 : (sr < 0 ? -1 : 0);
        const long double w = std::exp2(static_cast<long double>(p->P.value[i])) * s;
        ref += w * w;
        const long double g = lambda * s * s * std::exp2(2.0L * p->P.value[i]) * std::numbers::ln2_v<long double>;
        const long double err = g == 0 ? std::abs(p->P.grad[i]) : std::abs(p->P.grad[i] - g) / g;
        worst_g = std::max(worst_g, double(err));
      }
    ref *= 0.5L * lambda;
    worst_v = std::max(worst_v, double(std::abs(L->value[0] - ref) / ref));
  }
  return {worst_v <= 1e-10 && worst_g <= 1e-10,
          fmt("value max rel %.2g, P-gradient max rel %.2g (20 random tensor sets)", worst_v, worst_g)};
}

Outcome multiplication_freedom() {
  const fs::path dir = work_dir() / "mulfree";
  fs::remove_all(dir);
  std::string detail;
  bool ok = true;
  for (const std::string name : {"toy", "paper-cifar"}) {
    cli::RunConfig cfg = cli::preset(name);
    nn::OpCounts ops;
    std::size_t samples = 0;
    if (name == "toy") {
      cfg.train.epochs = 1;
      const auto tr = cli::cmd_train(cfg, dir / name);
      const auto rep = cli::cmd_eval(tr.checkpoint, cfg, dir / (name + "_eval"));
      ops = rep.ops;
      samples = rep.samples;
    } else {
      // CIFAR data is not shipped: evaluate the preset's full-size network,
      // stored through the checkpoint container, on two random images.
      auto ncfg = cfg.train.net;
      ncfg.in_channels = 3;
      ncfg.classes = 10;
      ncfg.reductions = space::resolve_reductions({.cells = ncfg.cells, .reductions = ncfg.reductions});
      auto net = genotype::instantiate(genotype::cifar10(), ncfg, nn::Domain::shift, cfg.seed);
      nlohmann::json meta{{"genotype", nlohmann::json::parse(genotype::serialize(genotype::cifar10()))},
                          {"network",
                           {{"cells", ncfg.cells},
                            {"channels", ncfg.channels},
                            {"reductions", ncfg.reductions},
                            {"in_channels", 3},
                            {"classes", 10},
                            {"stem_multiplier", ncfg.stem_multiplier}}}};
      const nn::Checkpoint ck = nn::capture(*net, nn::Domain::shift, meta);
      Dataset d;
      std::mt19937_64 rng(1);
      d.images = gradcheck::random_tensor({2, 3, 32, 32}, rng);
      d.labels = {0, 1};
      d.classes = 10;
      const auto rep = cli::eval_fixed(ck, d);
      ops = rep.ops;
      samples = rep.samples;
    }
    ok = ok && ops.weight_muls == 0 && ops.real_weight_reads == 0 && ops.shifts > 0;
    detail += fmt("eval[%s]: %zu samples, shifts %llu, weight multiplies %llu; ", name.c_str(), samples,
                  static_cast<unsigned long long>(ops.shifts), static_cast<unsigned long long>(ops.weight_muls));
  }
  const auto rows = cli::cmd_bench({16, 64, 128}, 1, dir / "bench.csv", 1);
  std::uint64_t bench_muls = 0;
  double diff = 0;
  for (const auto& r : rows)
    if (r.kernel == "shift") {
      bench_muls += r.ops.weight_muls;
      diff = std::max(diff, r.max_abs_diff);
      ok = ok && r.ops.shifts > 0;
    }
  ok = ok && bench_muls == 0;
  detail += fmt("bench shift rows: weight multiplies %llu, max |shift - dense| %.2g",
                static_cast<unsigned long long>(bench_muls), diff);
  return {ok, detail};
}

Outcome toy_search() {
  const fs::path dir = work_dir() / "toy_search";
  fs::remove_all(dir);
  const cli::RunConfig cfg = cli::preset("toy");
  const auto t0 = std::chrono::steady_clock::now();
  cli::cmd_search(cfg, dir / "a");
  const double first = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  cli::cmd_search(cfg, dir / "b");
  const std::string ga = read_file(dir / "a" / "genotype.json"), gb = read_file(dir / "b" / "genotype.json");
  const std::string ma = read_file(dir / "a" / "metrics.csv"), mb = read_file(dir / "b" / "metrics.csv");
  bool valid = true;
  try {
    genotype::validate(genotype::parse(ga));
  } catch (const std::exception&) {
    valid = false;
  }
  const bool same = !ga.empty() && ga == gb && ma == mb;
  return {first < 3600.0 && valid && same,
          fmt("first run %.1f s (limit 3600), genotype schema-valid: %s, rerun genotype and metrics identical: %s",
              first, valid ? "yes" : "NO", same ? "yes" : "NO")};
}

Outcome parity() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = work_dir() / "parity";
  fs::remove_all(dir);
  cli::cmd_gen_data(1000, 500, 12, 1, dir / "data");
  cli::RunConfig cfg = cli::preset("toy");
  cfg.data.kind = "idx-images";
  cfg.data.classes = 4;
  cfg.data.train_images = dir / "data" / "train-images.idx3-ubyte";
  cfg.data.train_labels = dir / "data" / "train-labels.idx1-ubyte";
  cfg.data.test_images = dir / "data" / "test-images.idx3-ubyte";
  cfg.data.test_labels = dir / "data" / "test-labels.idx1-ubyte";
  cfg.train.epochs = 20;
  cfg.train.genotype = "cifar10";
  cfg.train.net.cells = 3;
  cfg.train.net.channels = 8;
  const cli::LoadedData data = cli::load_data(cfg.data, 1);

  double real_sum = 0, shift_sum = 0;
  std::string per_seed;
  for (std::uint64_t seed : {1, 2, 3}) {
    cfg.seed = seed;
    cfg.train.domain = nn::Domain::real;
    const auto real = cli::train_network(cfg, data, {});
    cfg.train.domain = nn::Domain::shift;
    const auto tr = cli::train_network(cfg, data, dir / ("shift_" + std::to_string(seed)));
    // the shift model is scored on the fixed-point path
    const auto rep = cli::eval_fixed(nn::load_checkpoint(tr.checkpoint), data.test);
    real_sum += real.final_test_acc;
    shift_sum += rep.accuracy;
    per_seed += fmt(" seed %llu real %.1f%% shift %.1f%%;", static_cast<unsigned long long>(seed),
                    100 * real.final_test_acc, 100 * rep.accuracy);
  }
  const double real_mean = 100 * real_sum / 3, shift_mean = 100 * shift_sum / 3, gap = real_mean - shift_mean;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = gap <= 3.0 && shift_mean > 90.0 && real_mean > 93.0 && secs < 1800.0;
  return {pass, fmt("real %.2f%%, shift %.2f%%, gap %.2f pts (limit 3), %.0f s (limit 1800);", real_mean, shift_mean,
                    gap, secs) +
                    per_seed};
}

// Nearest representable value in the log domain over every decodable code.
double brute_nearest(double w) {
  if (std::abs(w) <= std::ldexp(1.0, -16)) return 0.0;
  double best = 0, best_d = INFINITY;
  for (int c = 0; c < 32; ++c) {
    const double v = shift::code_value(static_cast<std::uint8_t>(c));
    if (v == 0 || (v > 0) != (w > 0)) continue;
    const double d = std::abs(std::log2(std::abs(v)) - std::log2(std::abs(w)));
    if (d < best_d || (d == best_d && std::abs(v) < std::abs(best))) {  // ties round away from 2^0
      best_d = d;
      best = v;
    }
  }
  return best;
}

Outcome quantizer_bound() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> le(-18, 1.2);
  std::normal_distribution<double> nd(0, 0.2);
  const int N = 10000;
  std::vector<double> ws(N);
  for (int i = 0; i < N; ++i) ws[i] = i % 2 ? nd(rng) : (rng() % 2 ? 1 : -1) * std::exp2(le(rng));
  std::size_t mismatch = 0;
  double worst = 0;
  for (double w : ws) {
    const double q = cli::quantized_value(w), b = brute_nearest(w);
    if (q != b) ++mismatch;
    worst = std::max(worst, std::abs(w - b));
  }
  // the same weights through the command
  const fs::path dir = work_dir() / "quantize";
  fs::remove_all(dir);
  fs::create_directories(dir);
  nn::Checkpoint real;
  real.domain = nn::Domain::real;
  real.tensors.push_back(nn::pack_real("layer.weight", Tensor({N, 1, 1, 1}, ws)));
  nn::save_checkpoint(dir / "real.snck", real);
  const auto rep = cli::cmd_quantize(dir / "real.snck", dir / "shift.snck", dir / "report.json");
  const bool report_ok = rep.layers.size() == 1 && rep.layers[0].max_abs == worst;
  return {mismatch == 0 && report_ok,
          fmt("%d weights, %zu mismatches against the 32-code brute force; report max error %.6g vs brute force %.6g",
              N, mismatch, rep.layers.empty() ? -1.0 : rep.layers[0].max_abs, worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"shift-multiply equivalence", shift_multiply_equivalence},
      {"quantization oracle", quantization_oracle},
      {"backward-formula oracle", backward_oracle},
      {"topology algebra", topology_algebra},
      {"schedules", schedules},
      {"regularizer", regularizer},
      {"multiplication-freedom", multiplication_freedom},
      {"end-to-end toy search", toy_search},
      {"shift-vs-real parity", parity},
      {"quantizer bound", quantizer_bound},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << criteria[i].first << " (" << fmt("%.1f", secs)
              << " s): " << o.detail << std::endl;
    failed += !o.pass;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : std::string("acceptance: all passed"))
            << std::endl;
  return failed ? 1 : 0;
}
