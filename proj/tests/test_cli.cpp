// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "shiftnas/cli/commands.hpp"
#include "shiftnas/cli/config.hpp"
#include "shiftnas/cli/data.hpp"
#include "shiftnas/nn/checkpoint.hpp"

using namespace shiftnas;
using namespace shiftnas::cli;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("shiftnas_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}
}  // namespace

TEST_CASE("toml subset") {
  const auto j = parse_toml(R"(# run
preset = "toy"
seed = 7

[data]
kind = "synthetic-2d"   # inline comment
noise = 0.25
mean = [0.5,
        0.25]

[search.w_opt]
lr = 1e-2
rectified = true
)");
  CHECK(j["preset"] == "toy");
  CHECK(j["seed"] == 7);
  CHECK(j["data"]["noise"] == 0.25);
  CHECK(j["data"]["mean"][1] == 0.25);
  CHECK(j["search"]["w_opt"]["lr"] == 0.01);
  CHECK(j["search"]["w_opt"]["rectified"] == true);
  CHECK_THROWS(parse_toml("a = \n"));
  CHECK_THROWS(parse_toml("[x\n"));
  try {
    parse_toml("a = 1\nb = @\n");
    FAIL("expected a parse error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("config loading and overrides") {
  const fs::path dir = scratch("cfg");
  std::ofstream(dir / "run.toml") << "seed = 3\n[search]\nphase1_epochs = 2\n[train]\ndomain = \"real\"\n";
  const RunConfig c = load_config(dir / "run.toml");
  CHECK(c.seed == 3);
  CHECK(c.search.phase1_epochs == 2);
  CHECK(c.train.domain == nn::Domain::real);
  std::ofstream(dir / "bad.toml") << "[search]\nepochs_typo = 1\n";
  CHECK_THROWS(load_config(dir / "bad.toml"));
  std::ofstream(dir / "run.json") << R"({"preset": "paper-cifar", "seed": 11})";
  const RunConfig p = load_config(dir / "run.json");
  CHECK(p.search.phase1_epochs == 30);
  CHECK(p.search.phase2_epochs == 40);
  CHECK(p.train.net.cells == 20);
  CHECK(p.seed == 11);
  CHECK_THROWS(preset("imagenet"));
  RunConfig t = preset("toy");
  CHECK(t.search.net.cells == 5);
  CHECK(t.search.net.channels == 8);
  CHECK(t.train.net.cells == 8);
  CHECK(t.train.net.channels == 16);
  validate(t);
  t.search.batch_size = 0;
  CHECK_THROWS(validate(t));
  fs::remove_all(dir);
}

TEST_CASE("shipped configs load") {
  const RunConfig toy = load_config(fs::path(SHIFTNAS_SOURCE_DIR) / "configs" / "toy.toml");
  validate(toy);
  CHECK(toy.search.phase1_epochs == 5);
  CHECK(toy.train.net.channels == 16);
  const RunConfig shapes = load_config(fs::path(SHIFTNAS_SOURCE_DIR) / "configs" / "shapes.toml");
  CHECK(shapes.data.kind == "idx-images");
  CHECK(shapes.data.classes == 4);
}

TEST_CASE("idx parsing") {
  const std::vector<std::uint8_t> ok{0, 0, 0x08, 0x03, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 2, 9, 8, 7, 6};
  const IdxArray a = parse_idx(ok);
  CHECK(a.dims == std::vector<int>{2, 1, 2});
  CHECK(a.data == std::vector<std::uint8_t>{9, 8, 7, 6});
  auto wrong = ok;
  wrong[2] = 0x0D;
  CHECK_THROWS_AS(parse_idx(wrong), IdxError);
  auto magic = ok;
  magic[0] = 1;
  try {
    parse_idx(magic);
    FAIL("expected IdxError");
  } catch (const IdxError& e) {
    CHECK(e.offset() == 0);
  }
  auto short_data = ok;
  short_data.pop_back();
  try {
    parse_idx(short_data);
    FAIL("expected IdxError");
  } catch (const IdxError& e) {
    CHECK(e.offset() == 19);
  }
  const std::vector<std::uint8_t> trunc{0, 0, 8, 3, 0, 0};
  CHECK_THROWS_AS(parse_idx(trunc), IdxError);

  const fs::path dir = scratch("idx");
  write_idx(dir / "a.idx", a);
  const IdxArray back = load_idx(dir / "a.idx");
  CHECK(back.dims == a.dims);
  CHECK(back.data == a.data);
  CHECK_THROWS(load_idx(dir / "missing.idx"));
  fs::remove_all(dir);
}

TEST_CASE("synthetic data is reproducible and balanced") {
  const Dataset a = gen_synthetic("spirals", 200, 8, 0.1, 5);
  const Dataset b = gen_synthetic("spirals", 200, 8, 0.1, 5);
  const Dataset c = gen_synthetic("spirals", 200, 8, 0.1, 6);
  CHECK(a.images.data == b.images.data);
  CHECK(a.labels == b.labels);
  CHECK(a.images.data != c.images.data);
  CHECK(a.images.shape == Shape{200, 3, 8, 8});
  int ones = 0;
  for (int l : a.labels) ones += l;
  CHECK(ones == 100);
  CHECK(gen_synthetic("gaussians", 10, 6, 0.1, 1).images.shape == Shape{10, 3, 6, 6});
  CHECK_THROWS(gen_synthetic("moons", 10, 6, 0.1, 1));

  const ShapesData s = gen_shapes(40, 12, 3);
  CHECK(s.images.dims == std::vector<int>{40, 12, 12});
  CHECK(s.labels.dims == std::vector<int>{40});
  for (auto l : s.labels.data) CHECK(l < 4);
  const ShapesData s2 = gen_shapes(40, 12, 3);
  CHECK(s.images.data == s2.images.data);

  Dataset d = dataset_from_idx(s.images, s.labels, 4);
  const Normalization n = measure(d);
  normalize(d, n);
  double m = 0;
  for (double v : d.images.data) m += v;
  CHECK(std::abs(m / d.images.numel()) < 1e-9);
}

TEST_CASE("quantizer: powers of two are exact, ratio near 6.4") {
  for (int p = -14; p <= 0; ++p) {
    CHECK(quantized_value(std::ldexp(1.0, p)) == std::ldexp(1.0, p));
    CHECK(quantized_value(-std::ldexp(1.0, p)) == -std::ldexp(1.0, p));
  }
  CHECK(quantized_value(0.0) == 0.0);
  CHECK(quantized_value(0.3) == 0.25);
  CHECK(quantized_value(-0.4) == -0.5);

  const fs::path dir = scratch("quant");
  nn::Checkpoint real;
  real.domain = nn::Domain::real;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0, 0.1);
  Tensor w({64, 64, 3, 3});
  for (double& v : w.data) v = nd(rng);
  w.data[0] = 0.5;
  real.tensors.push_back(nn::pack_real("cells.0.conv.weight", w));
  real.tensors.push_back(nn::pack_real("cells.0.bn.gamma", Tensor({64}, 1.0)));
  nn::save_checkpoint(dir / "real.snck", real);
  const QuantizeReport rep = cmd_quantize(dir / "real.snck", dir / "shift.snck", dir / "report.json");
  CHECK(rep.weights == w.numel());
  CHECK(rep.compression_ratio == doctest::Approx(6.4).epsilon(1e-3));
  REQUIRE(rep.layers.size() == 1);
  double worst = 0;
  for (double v : w.data) worst = std::max(worst, std::abs(v - quantized_value(v)));
  CHECK(rep.layers[0].max_abs == worst);
  const nn::Checkpoint out = nn::load_checkpoint(dir / "shift.snck");
  CHECK(out.domain == nn::Domain::shift);
  CHECK(out.find("cells.0.conv.weight")->kind == "shift5");
  CHECK(out.find("cells.0.bn.gamma")->kind == "f64");
  CHECK(fs::exists(dir / "report.json"));
  CHECK_THROWS(cmd_quantize(dir / "shift.snck", dir / "again.snck", {}));
  std::ofstream(dir / "junk.snck") << "definitely not a checkpoint";
  CHECK_THROWS(cmd_quantize(dir / "junk.snck", dir / "again.snck", {}));
  fs::remove_all(dir);
}

TEST_CASE("bench: shift kernel multiplies no weights and matches dense") {
  const fs::path dir = scratch("bench");
  const auto rows = cmd_bench({8, 16}, 1, dir / "bench.csv", 1);
  CHECK(rows.size() == 4);
  for (const auto& r : rows) {
    if (r.kernel == "shift") {
      CHECK(r.ops.weight_muls == 0);
      CHECK(r.ops.shifts > 0);
      CHECK(r.max_abs_diff <= std::ldexp(1.0, -8));
    } else {
      CHECK(r.ops.weight_muls > 0);
    }
  }
  std::ifstream f(dir / "bench.csv");
  std::string header;
  std::getline(f, header);
  CHECK(header.rfind("size,kernel", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("train, eval and export round trip") {
  const fs::path dir = scratch("train");
  RunConfig cfg = preset("toy");
  cfg.seed = 4;
  cfg.data.samples = 64;
  cfg.data.test_samples = 32;
  cfg.train.epochs = 1;
  cfg.train.net.cells = 3;
  cfg.train.net.channels = 4;
  const TrainResult tr = cmd_train(cfg, dir / "run");
  CHECK(fs::exists(tr.checkpoint));
  CHECK(fs::exists(dir / "run" / "metrics.csv"));
  CHECK(tr.epochs.size() == 1);

  const EvalReport e1 = cmd_eval(tr.checkpoint, cfg, dir / "eval1");
  const EvalReport e2 = cmd_eval(tr.checkpoint, cfg, dir / "eval2");
  CHECK(e1.samples == 32);
  CHECK(e1.ops.weight_muls == 0);
  CHECK(e1.ops.real_weight_reads == 0);
  CHECK(e1.prediction_hash == e2.prediction_hash);
  CHECK(e1.accuracy == e2.accuracy);
  // checkpoint weights survive a reload byte for byte
  const nn::Checkpoint a = nn::load_checkpoint(tr.checkpoint);
  nn::save_checkpoint(dir / "copy.snck", a);
  const nn::Checkpoint b = nn::load_checkpoint(dir / "copy.snck");
  REQUIRE(a.tensors.size() == b.tensors.size());
  for (std::size_t i = 0; i < a.tensors.size(); ++i) CHECK(a.tensors[i].bytes == b.tensors[i].bytes);

  // mismatched architecture is refused
  RunConfig other = cfg;
  nn::Checkpoint tampered = a;
  tampered.meta["network"]["channels"] = 8;
  nn::save_checkpoint(dir / "tampered.snck", tampered);
  CHECK_THROWS(cmd_eval(dir / "tampered.snck", other, dir / "eval3"));

  cmd_export_genotype("cifar100", dir / "geno");
  CHECK(genotype::parse([&] {
          std::ifstream f(dir / "geno" / "genotype.json");
          return std::string(std::istreambuf_iterator<char>(f), {});
        }()) == genotype::cifar100());
  CHECK_THROWS(resolve_genotype("nope"));
  fs::remove_all(dir);
}
