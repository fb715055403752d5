// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "shiftnas/tensor.hpp"

namespace shiftnas {

// Labelled images in NCHW layout.
struct Dataset {
  Tensor images;
  std::vector<int> labels;
  int classes = 0;

  std::size_t size() const { return labels.size(); }
  Shape sample_shape() const { return {images.dim(1), images.dim(2), images.dim(3)}; }

  Dataset subset(std::span<const std::size_t> idx) const;
  Tensor gather(std::span<const std::size_t> idx) const;
  std::vector<int> gather_labels(std::span<const std::size_t> idx) const;
  // Throws std::invalid_argument if labels and images disagree.
  void check() const;
};

// Index batches over [0, n); shuffled when rng is given. The last batch may be short.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch, std::mt19937_64* rng);

// Deterministic split: the first `first` indices of a seeded permutation, then the rest.
std::pair<Dataset, Dataset> split(const Dataset& d, std::size_t first, std::uint64_t seed);

}  // namespace shiftnas
