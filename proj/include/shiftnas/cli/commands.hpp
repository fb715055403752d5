// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shiftnas/cli/config.hpp"
#include "shiftnas/cli/data.hpp"
#include "shiftnas/nn/checkpoint.hpp"
#include "shiftnas/nn/counters.hpp"

namespace shiftnas::cli {

namespace fs = std::filesystem;

// search: genotype.json, metrics.csv, summary.txt under out.
search::SearchResult cmd_search(const RunConfig& cfg, const fs::path& out);

struct TrainEpoch {
  int epoch;
  double lr, train_loss, train_acc, test_loss, test_acc;
};
struct TrainResult {
  std::vector<TrainEpoch> epochs;
  double final_test_acc = 0.0;
  fs::path checkpoint;
};

// Built-in genotype name (cifar10, cifar100) or a genotype JSON path.
genotype::Genotype resolve_genotype(const std::string& name_or_path);

// Trains the instantiated genotype from scratch in cfg.train.domain on the
// configured data. Writes checkpoint.snck and metrics.csv under out.
TrainResult cmd_train(const RunConfig& cfg, const fs::path& out);
// Same on already-loaded data (used by parity experiments).
TrainResult train_network(const RunConfig& cfg, const LoadedData& data, const fs::path& out);

struct EvalReport {
  std::size_t samples = 0;
  double accuracy = 0.0;
  nn::OpCounts ops;
  std::string prediction_hash;  // FNV-1a over the predicted labels
};

// Rebuilds the network described by the checkpoint, installs the stored
// quantized weights and classifies the test split on the Q16.16 shift path
// only. Throws for a real-valued checkpoint or a structural mismatch.
EvalReport cmd_eval(const fs::path& checkpoint, const RunConfig& cfg, const fs::path& out);
EvalReport eval_fixed(const nn::Checkpoint& ckpt, const Dataset& test);

struct LayerError {
  std::string name;
  std::size_t count = 0;
  double max_abs = 0.0;
  double mean_abs = 0.0;
};
struct QuantizeReport {
  std::vector<LayerError> layers;
  std::size_t weights = 0;
  double compression_ratio = 0.0;  // 32-bit float storage over packed 5-bit storage
};

// Nearest stored power of two for one real weight (init_from_real, rounding,
// then the 5-bit code round trip).
double quantized_value(double w);

// Converts a real-domain checkpoint into a shift-domain one.
QuantizeReport cmd_quantize(const fs::path& in, const fs::path& out_ckpt, const fs::path& report);
nn::Checkpoint quantize_checkpoint(const nn::Checkpoint& real, QuantizeReport& report);

struct BenchRow {
  int size = 0;
  std::string kernel;  // "dense" or "shift"
  double millis = 0.0;
  nn::OpCounts ops;
  double max_abs_diff = 0.0;  // against the dense result
};

// Matched size x size by size x size matrix products.
std::vector<BenchRow> cmd_bench(const std::vector<int>& sizes, std::uint64_t seed, const fs::path& csv, int repeats = 3);

// genotype.json and genotype.txt (tabular) under out.
void cmd_export_genotype(const std::string& name_or_path, const fs::path& out);

// Writes the four-class shapes dataset as IDX files under out.
void cmd_gen_data(int train_samples, int test_samples, int image_size, std::uint64_t seed, const fs::path& out);

}  // namespace shiftnas::cli
