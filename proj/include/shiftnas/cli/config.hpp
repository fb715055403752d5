// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "shiftnas/genotype.hpp"
#include "shiftnas/search.hpp"

namespace shiftnas::cli {

// Parses the TOML subset used by run configs: [tables] and [dotted.tables],
// key = value with strings, integers, floats, booleans and (multi-line)
// arrays of those, '#' comments. Throws std::invalid_argument with the line
// number on anything else.
nlohmann::json parse_toml(const std::string& text);

struct DataSpec {
  std::string kind = "synthetic-2d";  // idx-images | synthetic-2d | raw-binary-cifar
  std::string pattern = "spirals";    // synthetic: spirals | gaussians
  int samples = 512;                  // synthetic training samples
  int test_samples = 256;
  int image_size = 8;
  double noise = 0.15;
  int classes = 2;
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  std::filesystem::path cifar_dir;
  std::vector<double> mean, std;      // per channel; empty: measured on the training split
  double heldout_fraction = 0.25;     // search: share of the search set kept for metrics only
};

struct TrainSpec {
  int epochs = 20;
  int batch_size = 32;
  nn::AdamConfig opt{.lr = 0.01, .weight_decay = 3e-4, .rectified = true};
  double lambda = 3e-4;
  search::RegKind reg = search::RegKind::modified;
  nn::Domain domain = nn::Domain::shift;
  std::string genotype = "cifar10";   // built-in name or path to a genotype JSON
  genotype::NetworkConfig net;
};

struct RunConfig {
  std::string preset = "toy";
  std::uint64_t seed = 0;
  DataSpec data;
  search::SearchConfig search;
  TrainSpec train;
};

// Throws std::invalid_argument for an unknown name.
RunConfig preset(const std::string& name);

// Overlays a TOML (or, for *.json, JSON) file on a preset. A "preset" key in
// the file selects the base preset; unknown keys are errors.
RunConfig load_config(const std::filesystem::path& path, const std::string& default_preset = "toy");
void apply_overrides(RunConfig& cfg, const nlohmann::json& j);

// Checks ranges and that every input path exists.
void validate(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace shiftnas::cli
