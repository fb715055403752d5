// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "shiftnas/cli/config.hpp"
#include "shiftnas/dataset.hpp"

namespace shiftnas::cli {

// Raw IDX array. Only unsigned-byte payloads (type 0x08) are supported.
struct IdxArray {
  std::vector<int> dims;
  std::vector<std::uint8_t> data;
};

class IdxError : public std::runtime_error {
 public:
  IdxError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

IdxArray parse_idx(std::span<const std::uint8_t> bytes);
IdxArray load_idx(const std::filesystem::path& path);
void write_idx(const std::filesystem::path& path, const IdxArray& a);

// images: [N, H, W] or [N, C, H, W]; labels: [N]. Pixels scaled to [0, 1].
Dataset dataset_from_idx(const IdxArray& images, const IdxArray& labels, int classes);

// Two-class 2D points (spirals or gaussians) rasterised to 3 x size x size
// images: a Gaussian blob at the point plus constant x and y planes.
Dataset gen_synthetic(const std::string& pattern, int n, int image_size, double noise, std::uint64_t seed);

// Four-class grayscale shapes (square, disc, cross, triangle) with random
// placement, size, intensity and background noise.
struct ShapesData {
  IdxArray images;
  IdxArray labels;
};
ShapesData gen_shapes(int n, int image_size, std::uint64_t seed);

// CIFAR binary records: 1 label byte + 3072 pixel bytes.
Dataset load_cifar_bin(const std::vector<std::filesystem::path>& files);

struct Normalization {
  std::vector<double> mean, std;
  nlohmann::json to_json() const { return {{"mean", mean}, {"std", std}}; }
};
Normalization measure(const Dataset& d);
void normalize(Dataset& d, const Normalization& n);

struct LoadedData {
  Dataset train;
  Dataset test;
  Normalization norm;
};
LoadedData load_data(const DataSpec& spec, std::uint64_t seed);

}  // namespace shiftnas::cli
