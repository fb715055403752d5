// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "shiftnas/nn/kernels.hpp"
#include "shiftnas/nn/optim.hpp"

namespace shiftnas::cli {

using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int argmax_row(std::span<const double> row) { return search::argmax_first(row); }

// Splits off the held-out metric set from the search data.
std::pair<Dataset, Dataset> heldout_split(const Dataset& train, double fraction, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(train.size())));
  return split(train, n, seed + 3);
}

json network_meta(const genotype::NetworkConfig& n) {
  return {{"cells", n.cells},     {"channels", n.channels}, {"reductions", n.reductions},
          {"in_channels", n.in_channels}, {"classes", n.classes},   {"stem_multiplier", n.stem_multiplier}};
}

genotype::NetworkConfig network_from_meta(const json& j) {
  genotype::NetworkConfig n;
  n.cells = j.at("cells").get<int>();
  n.channels = j.at("channels").get<int>();
  n.reductions = j.at("reductions").get<std::vector<int>>();
  n.in_channels = j.at("in_channels").get<int>();
  n.classes = j.at("classes").get<int>();
  n.stem_multiplier = j.at("stem_multiplier").get<int>();
  return n;
}

std::string fnv1a_hex(const std::vector<int>& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int x : v) {
    for (int b = 0; b < 4; ++b) {
      h ^= static_cast<std::uint8_t>((static_cast<std::uint32_t>(x) >> (8 * b)) & 0xFF);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json ops_json(const nn::OpCounts& c) {
  return {{"adds", c.adds},           {"shifts", c.shifts},           {"flips", c.flips},
          {"weight_muls", c.weight_muls}, {"affine_muls", c.affine_muls}, {"real_weight_reads", c.real_weight_reads}};
}

}  // namespace

// ---------------------------------------------------------------------------

search::SearchResult cmd_search(const RunConfig& cfg, const fs::path& out) {
  validate(cfg);
  const LoadedData data = load_data(cfg.data, cfg.seed);
  const auto [heldout, search_set] = heldout_split(data.train, cfg.data.heldout_fraction, cfg.seed);

  search::SearchConfig sc = cfg.search;
  sc.seed = cfg.seed;
  sc.net.in_channels = data.train.images.dim(1);
  sc.net.classes = data.train.classes;

  fs::create_directories(out);
  const auto start = std::chrono::steady_clock::now();
  auto result = search::run_search(sc, search_set, heldout, [](const search::MetricRow& r) {
    std::fprintf(stderr, "[search] epoch %d (%s) lr %.5f T %.4f train_loss %.4f val_loss %.4f val_acc %.3f skip %.3f\n",
                 r.epoch, r.phase == 1 ? "operation" : "topology", r.lr, r.T, r.train_loss, r.val_loss, r.val_acc,
                 r.max_alpha_skip_fraction);
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_text(out / "genotype.json", genotype::serialize(result.genotype));
  search::write_metrics_csv(out / "metrics.csv", result.metrics);
  std::ostringstream summary;
  summary << "search finished in " << seconds << " s\n";
  if (!result.metrics.empty()) {
    const auto& last = result.metrics.back();
    summary << "final val_loss " << last.val_loss << ", val_acc " << last.val_acc << "\n";
  }
  summary << "\n" << genotype::pretty(result.genotype) << "\nconfig:\n" << to_json(cfg).dump(2) << "\n";
  write_text(out / "summary.txt", summary.str());
  return result;
}

// ---------------------------------------------------------------------------

genotype::Genotype resolve_genotype(const std::string& name_or_path) {
  if (name_or_path == "cifar10") return genotype::cifar10();
  if (name_or_path == "cifar100") return genotype::cifar100();
  if (!fs::exists(name_or_path))
    throw std::invalid_argument("genotype '" + name_or_path + "' is neither a built-in name nor an existing file");
  return genotype::parse(read_text(name_or_path));
}

TrainResult cmd_train(const RunConfig& cfg, const fs::path& out) {
  validate(cfg);
  return train_network(cfg, load_data(cfg.data, cfg.seed), out);
}

TrainResult train_network(const RunConfig& cfg, const LoadedData& data, const fs::path& out) {
  const auto& t = cfg.train;
  const genotype::Genotype g = resolve_genotype(t.genotype);
  genotype::NetworkConfig ncfg = t.net;
  ncfg.in_channels = data.train.images.dim(1);
  ncfg.classes = data.train.classes;
  ncfg.reductions = space::resolve_reductions({.cells = ncfg.cells, .reductions = ncfg.reductions});
  auto net = genotype::instantiate(g, ncfg, t.domain, cfg.seed);

  nn::ParamRefs refs;
  net->collect(refs, "");
  nn::Adam opt(t.opt, refs.real_params(), {}, refs.shift_params());
  const auto shift_params = refs.shift_params();
  const search::LrSchedule lr{t.opt.lr, t.epochs, 0, false};
  const nn::Context train_ctx{.training = true}, eval_ctx{.training = false};
  std::mt19937_64 rng(cfg.seed ^ 0x7a11ULL);

  auto run_eval = [&](const Dataset& d) {
    nn::NoGradGuard guard;
    double loss = 0.0;
    std::size_t correct = 0;
    for (const auto& idx : make_batches(d.size(), 128, nullptr)) {
      const auto labels = d.gather_labels(idx);
      const nn::Var logits = net->forward(nn::constant(d.gather(idx)), eval_ctx);
      loss += nn::cross_entropy(logits, labels)->value[0] * static_cast<double>(idx.size());
      const auto K = static_cast<std::size_t>(logits->value.dim(1));
      for (std::size_t i = 0; i < idx.size(); ++i)
        if (argmax_row(std::span<const double>(logits->value.data).subspan(i * K, K)) == labels[i]) ++correct;
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, d.size()));
    return std::pair{loss / n, static_cast<double>(correct) / n};
  };

  TrainResult result;
  for (int epoch = 0; epoch < t.epochs; ++epoch) {
    const auto batches = make_batches(data.train.size(), static_cast<std::size_t>(t.batch_size), &rng);
    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      opt.set_lr(lr(epoch + static_cast<double>(b) / static_cast<double>(batches.size())));
      opt.zero_grad();
      const auto labels = data.train.gather_labels(batches[b]);
      const nn::Var logits = net->forward(nn::constant(data.train.gather(batches[b])), train_ctx);
      const nn::Var L = nn::cross_entropy(logits, labels);
      if (!std::isfinite(L->value[0]))
        throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(b) +
                                 " (lr " + std::to_string(opt.lr()) + "); try a smaller learning rate");
      nn::backward(t.domain == nn::Domain::shift ? search::regularized_loss(L, shift_params, t.lambda, t.reg) : L);
      opt.step();
      loss_sum += L->value[0] * static_cast<double>(labels.size());
      const auto K = static_cast<std::size_t>(logits->value.dim(1));
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (argmax_row(std::span<const double>(logits->value.data).subspan(i * K, K)) == labels[i]) ++correct;
      seen += labels.size();
    }
    const auto [test_loss, test_acc] = run_eval(data.test);
    result.epochs.push_back({epoch, lr(epoch), loss_sum / static_cast<double>(seen),
                             static_cast<double>(correct) / static_cast<double>(seen), test_loss, test_acc});
    std::fprintf(stderr, "[train:%s] epoch %d lr %.5f train_loss %.4f train_acc %.3f test_acc %.3f\n",
                 nn::to_string(t.domain), epoch, lr(epoch), result.epochs.back().train_loss,
                 result.epochs.back().train_acc, test_acc);
  }
  result.final_test_acc = result.epochs.empty() ? 0.0 : result.epochs.back().test_acc;

  if (!out.empty()) {
    fs::create_directories(out);
    json meta = {{"genotype", json::parse(genotype::serialize(g))},
                 {"network", network_meta(ncfg)},
                 {"normalization", data.norm.to_json()},
                 {"seed", cfg.seed},
                 {"final_test_acc", result.final_test_acc}};
    result.checkpoint = out / "checkpoint.snck";
    nn::save_checkpoint(result.checkpoint, nn::capture(*net, t.domain, meta));
    std::ofstream csv(out / "metrics.csv");
    csv << "epoch,lr,train_loss,train_acc,test_loss,test_acc\n";
    csv.precision(10);
    for (const auto& e : result.epochs)
      csv << e.epoch << ',' << e.lr << ',' << e.train_loss << ',' << e.train_acc << ',' << e.test_loss << ','
          << e.test_acc << '\n';
  }
  return result;
}

// ---------------------------------------------------------------------------

EvalReport eval_fixed(const nn::Checkpoint& ckpt, const Dataset& test) {
  if (ckpt.domain != nn::Domain::shift)
    throw std::invalid_argument("eval runs the fixed-point shift path; this checkpoint holds a real-valued network "
                                "(convert it with 'quantize' first)");
  const genotype::Genotype g = genotype::parse(ckpt.meta.at("genotype").dump());
  const genotype::NetworkConfig ncfg = network_from_meta(ckpt.meta.at("network"));
  if (test.images.dim(1) != ncfg.in_channels)
    throw std::invalid_argument("dataset has " + std::to_string(test.images.dim(1)) + " channels, network expects " +
                                std::to_string(ncfg.in_channels));
  auto net = genotype::instantiate(g, ncfg, nn::Domain::shift, 0);
  nn::restore(ckpt, *net);
  nn::ParamRefs refs;
  net->collect(refs, "");
  // Drop the trainable shift tensors: only the stored codes remain.
  for (auto& [_, conv] : refs.convs) conv->shift_weight() = shift::ShiftParam{};

  EvalReport rep;
  std::vector<int> preds;
  const nn::OpCounts before = nn::op_counters().snapshot();
  for (const auto& idx : make_batches(test.size(), 128, nullptr)) {
    const FixedTensor logits = net->infer(to_fixed(test.gather(idx)));
    const int K = logits.dim(1);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      int best = 0;
      for (int k = 1; k < K; ++k)
        if (logits.data[i * K + k] > logits.data[i * K + best]) best = k;
      preds.push_back(best);
      ++rep.samples;
      if (best == test.labels[idx[i]]) rep.accuracy += 1.0;
    }
  }
  rep.ops = nn::op_counters().snapshot() - before;
  if (rep.ops.real_weight_reads != 0)
    throw std::logic_error("fixed-point evaluation read real-valued weights");
  rep.accuracy /= static_cast<double>(std::max<std::size_t>(1, rep.samples));
  rep.prediction_hash = fnv1a_hex(preds);
  return rep;
}

EvalReport cmd_eval(const fs::path& checkpoint, const RunConfig& cfg, const fs::path& out) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(checkpoint);
  RunConfig c = cfg;
  if (ckpt.meta.contains("normalization")) {
    c.data.mean = ckpt.meta["normalization"].at("mean").get<std::vector<double>>();
    c.data.std = ckpt.meta["normalization"].at("std").get<std::vector<double>>();
  }
  validate(c);
  const LoadedData data = load_data(c.data, c.seed);
  EvalReport rep = eval_fixed(ckpt, data.test);
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(out / "eval.json", json{{"checkpoint", checkpoint.string()},
                                       {"samples", rep.samples},
                                       {"accuracy", rep.accuracy},
                                       {"ops", ops_json(rep.ops)},
                                       {"prediction_hash", rep.prediction_hash}}
                                      .dump(2) +
                                      "\n");
  }
  return rep;
}

// ---------------------------------------------------------------------------

double quantized_value(double w) {
  const shift::QuantizedView v = shift::quantize(shift::init_from_real(Tensor({1}, w)));
  return shift::code_value(shift::encode_weight(v.shift[0], v.sign[0]));
}

nn::Checkpoint quantize_checkpoint(const nn::Checkpoint& real, QuantizeReport& report) {
  if (real.domain != nn::Domain::real)
    throw std::invalid_argument("quantize expects a real-valued checkpoint; this one is already in the shift domain");
  nn::Checkpoint out;
  out.domain = nn::Domain::shift;
  out.meta = real.meta;
  out.meta["quantized_from"] = "real";
  report = {};
  std::size_t packed = 0;
  for (const auto& t : real.tensors) {
    const bool conv_weight = t.kind == "f64" && t.shape.size() == 4 && t.name.ends_with("weight");
    if (!conv_weight) {
      out.tensors.push_back(t);
      continue;
    }
    const Tensor w = nn::unpack_real(t);
    auto bytes = shift::encode_view(shift::quantize(shift::init_from_real(w)));
    const shift::QuantizedView stored = shift::decode_view(bytes);
    LayerError e{t.name, w.numel(), 0.0, 0.0};
    for (std::size_t i = 0; i < w.numel(); ++i) {
      const double err = std::abs(w[i] - stored.weight[i]);
      e.max_abs = std::max(e.max_abs, err);
      e.mean_abs += err;
    }
    e.mean_abs /= static_cast<double>(std::max<std::size_t>(1, w.numel()));
    report.layers.push_back(e);
    report.weights += w.numel();
    packed += shift::packed_bytes(w.numel());
    out.tensors.push_back({t.name, "shift5", t.shape, std::move(bytes)});
  }
  report.compression_ratio = packed ? 32.0 * static_cast<double>(report.weights) / (8.0 * static_cast<double>(packed)) : 0.0;
  return out;
}

QuantizeReport cmd_quantize(const fs::path& in, const fs::path& out_ckpt, const fs::path& report_path) {
  QuantizeReport rep;
  const nn::Checkpoint shifted = quantize_checkpoint(nn::load_checkpoint(in), rep);
  if (out_ckpt.has_parent_path()) fs::create_directories(out_ckpt.parent_path());
  nn::save_checkpoint(out_ckpt, shifted);
  if (!report_path.empty()) {
    json layers = json::array();
    for (const auto& l : rep.layers)
      layers.push_back({{"name", l.name}, {"weights", l.count}, {"max_abs_error", l.max_abs}, {"mean_abs_error", l.mean_abs}});
    write_text(report_path, json{{"layers", layers}, {"weights", rep.weights}, {"compression_ratio", rep.compression_ratio}}
                                    .dump(2) +
                                "\n");
  }
  return rep;
}

// ---------------------------------------------------------------------------

std::vector<BenchRow> cmd_bench(const std::vector<int>& sizes, std::uint64_t seed, const fs::path& csv, int repeats) {
  std::vector<BenchRow> rows;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  std::uniform_int_distribution<int> pick_shift(-8, 0), pick_sign(-1, 1);
  for (int n : sizes) {
    if (n <= 0) throw std::invalid_argument("bench sizes must be positive");
    // [n x n] * [n x n] as a 1x1 convolution: n input channels, n positions, n outputs.
    Tensor x({1, n, n, 1});
    for (double& v : x.data) v = uni(rng);
    const FixedTensor xf = to_fixed(x);
    const Tensor xr = to_real(xf);
    std::vector<std::int8_t> shifts(static_cast<std::size_t>(n) * n);
    std::vector<fxp::Sign> signs(shifts.size());
    for (std::size_t i = 0; i < shifts.size(); ++i) {
      shifts[i] = static_cast<std::int8_t>(pick_shift(rng));
      signs[i] = fxp::to_sign(pick_sign(rng));
    }
    const shift::QuantizedView view = shift::make_view({n, n, 1, 1}, shifts, signs);
    const Tensor w = view.weight_tensor();

    auto time_it = [&](auto&& fn) {
      double best = 1e300;
      for (int r = 0; r < std::max(1, repeats); ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
      }
      return best;
    };

    Tensor dense;
    FixedTensor shifted;
    auto c0 = nn::op_counters().snapshot();
    const double t_dense = time_it([&] { dense = nn::conv2d_real(xr, w, nullptr, {}); });
    auto c1 = nn::op_counters().snapshot();
    const double t_shift = time_it([&] { shifted = nn::conv2d_shift(xf, view, nullptr, {}); });
    auto c2 = nn::op_counters().snapshot();
    const auto reps = static_cast<std::uint64_t>(std::max(1, repeats));
    auto per_run = [&](nn::OpCounts c) {
      for (auto* f : {&c.adds, &c.shifts, &c.flips, &c.weight_muls, &c.affine_muls, &c.real_weight_reads}) *f /= reps;
      return c;
    };
    double diff = 0.0;
    for (std::size_t i = 0; i < dense.numel(); ++i) diff = std::max(diff, std::abs(dense[i] - shifted.data[i].to_real()));
    rows.push_back({n, "dense", t_dense, per_run(c1 - c0), 0.0});
    rows.push_back({n, "shift", t_shift, per_run(c2 - c1), diff});
  }
  if (!csv.empty()) {
    if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
    std::ofstream os(csv);
    if (!os) throw std::runtime_error("cannot write " + csv.string());
    os << "size,kernel,millis,adds,shifts,flips,weight_muls,max_abs_diff\n";
    for (const auto& r : rows)
      os << r.size << ',' << r.kernel << ',' << r.millis << ',' << r.ops.adds << ',' << r.ops.shifts << ',' << r.ops.flips
         << ',' << r.ops.weight_muls << ',' << r.max_abs_diff << '\n';
  }
  return rows;
}

// ---------------------------------------------------------------------------

void cmd_export_genotype(const std::string& name_or_path, const fs::path& out) {
  const genotype::Genotype g = resolve_genotype(name_or_path);
  fs::create_directories(out);
  write_text(out / "genotype.json", genotype::serialize(g));
  write_text(out / "genotype.txt", genotype::pretty(g));
}

void cmd_gen_data(int train_samples, int test_samples, int image_size, std::uint64_t seed, const fs::path& out) {
  fs::create_directories(out);
  const ShapesData train = gen_shapes(train_samples, image_size, seed);
  const ShapesData test = gen_shapes(test_samples, image_size, seed + 1);
  write_idx(out / "train-images.idx3-ubyte", train.images);
  write_idx(out / "train-labels.idx1-ubyte", train.labels);
  write_idx(out / "test-images.idx3-ubyte", test.images);
  write_idx(out / "test-labels.idx1-ubyte", test.labels);
}

}  // namespace shiftnas::cli
