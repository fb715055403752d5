// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "shiftnas/cli/commands.hpp"

namespace cli = shiftnas::cli;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "runs";
  std::string preset = "toy";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "TOML or JSON run config")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Override the config seed");
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
  app->add_option("--preset", c.preset, "Base preset")->check(CLI::IsMember({"toy", "paper-cifar"}))->capture_default_str();
}

cli::RunConfig resolve(const Common& c) {
  cli::RunConfig cfg = c.config.empty() ? cli::preset(c.preset) : cli::load_config(c.config, c.preset);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void print_ops(const shiftnas::nn::OpCounts& o) {
  std::printf("ops: adds %llu, shifts %llu, flips %llu, weight multiplies %llu, affine multiplies %llu\n",
              static_cast<unsigned long long>(o.adds), static_cast<unsigned long long>(o.shifts),
              static_cast<unsigned long long>(o.flips), static_cast<unsigned long long>(o.weight_muls),
              static_cast<unsigned long long>(o.affine_muls));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shiftnas: bit-shift networks and two-phase architecture search"};
  app.require_subcommand(1);

  Common search_opts, train_opts, eval_opts, quant_opts, bench_opts, export_opts, gen_opts;

  auto* search = app.add_subcommand("search", "Run the two-phase search and write a genotype");
  add_common(search, search_opts);

  auto* train = app.add_subcommand("train", "Train a genotype from scratch");
  add_common(train, train_opts);
  std::string train_genotype, train_domain;
  train->add_option("--genotype", train_genotype, "Built-in name (cifar10, cifar100) or genotype JSON");
  train->add_option("--domain", train_domain, "shift or real")->check(CLI::IsMember({"shift", "real"}));

  auto* eval = app.add_subcommand("eval", "Evaluate a shift checkpoint on the fixed-point path");
  add_common(eval, eval_opts);
  std::string eval_ckpt;
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);

  auto* quant = app.add_subcommand("quantize", "Convert a real-valued checkpoint to power-of-two weights");
  add_common(quant, quant_opts);
  std::string quant_in;
  quant->add_option("--checkpoint", quant_in, "Real-valued checkpoint")->required()->check(CLI::ExistingFile);

  auto* bench = app.add_subcommand("bench", "Time dense multiply against the shift kernel");
  add_common(bench, bench_opts);
  std::vector<int> sizes{64, 128, 256};
  int repeats = 3;
  bench->add_option("--sizes", sizes, "Square matrix sizes")->delimiter(',')->capture_default_str();
  bench->add_option("--repeats", repeats, "Timing repetitions (best is kept)")->capture_default_str();

  auto* exp = app.add_subcommand("export-genotype", "Write a genotype as JSON and as a table");
  add_common(exp, export_opts);
  std::string export_name = "cifar10";
  exp->add_option("--genotype", export_name, "Built-in name or genotype JSON")->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "Write the four-class shapes dataset as IDX files");
  add_common(gen, gen_opts);
  int gen_train = 1000, gen_test = 500, gen_size = 12;
  gen->add_option("--train-samples", gen_train)->capture_default_str();
  gen->add_option("--test-samples", gen_test)->capture_default_str();
  gen->add_option("--image-size", gen_size)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*search) {
      const auto cfg = resolve(search_opts);
      const auto result = cli::cmd_search(cfg, search_opts.out);
      std::cout << shiftnas::genotype::pretty(result.genotype);
      std::cout << "wrote " << (fs::path(search_opts.out) / "genotype.json").string() << "\n";
    } else if (*train) {
      auto cfg = resolve(train_opts);
      if (!train_genotype.empty()) cfg.train.genotype = train_genotype;
      if (!train_domain.empty()) cfg.train.domain = shiftnas::nn::domain_from_string(train_domain);
      const auto result = cli::cmd_train(cfg, train_opts.out);
      std::printf("final test accuracy %.4f\nwrote %s\n", result.final_test_acc, result.checkpoint.string().c_str());
    } else if (*eval) {
      const auto rep = cli::cmd_eval(eval_ckpt, resolve(eval_opts), eval_opts.out);
      std::printf("samples %zu, top-1 accuracy %.4f, prediction hash %s\n", rep.samples, rep.accuracy,
                  rep.prediction_hash.c_str());
      print_ops(rep.ops);
    } else if (*quant) {
      const fs::path out(quant_opts.out);
      const auto rep = cli::cmd_quantize(quant_in, out / "checkpoint.snck", out / "quantize.json");
      for (const auto& l : rep.layers)
        std::printf("%-48s %7zu weights  max |err| %.6g  mean |err| %.6g\n", l.name.c_str(), l.count, l.max_abs, l.mean_abs);
      std::printf("compression ratio %.3fx over 32-bit floats\n", rep.compression_ratio);
    } else if (*bench) {
      const auto cfg = resolve(bench_opts);
      const auto rows = cli::cmd_bench(sizes, cfg.seed, fs::path(bench_opts.out) / "bench.csv", repeats);
      for (const auto& r : rows)
        std::printf("n=%-5d %-6s %10.3f ms  weight multiplies %llu  shifts %llu  max |diff| %.3g\n", r.size,
                    r.kernel.c_str(), r.millis, static_cast<unsigned long long>(r.ops.weight_muls),
                    static_cast<unsigned long long>(r.ops.shifts), r.max_abs_diff);
    } else if (*exp) {
      cli::cmd_export_genotype(export_name, export_opts.out);
      std::cout << shiftnas::genotype::pretty(cli::resolve_genotype(export_name));
    } else if (*gen) {
      const auto cfg = resolve(gen_opts);
      cli::cmd_gen_data(gen_train, gen_test, gen_size, cfg.seed, gen_opts.out);
      std::printf("wrote shapes IDX files to %s\n", gen_opts.out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
