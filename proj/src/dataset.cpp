// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace shiftnas {

void Dataset::check() const {
  if (images.rank() != 4) throw std::invalid_argument("dataset: images must be NCHW, got " + shape_str(images.shape));
  if (static_cast<std::size_t>(images.dim(0)) != labels.size())
    throw std::invalid_argument("dataset: " + std::to_string(images.dim(0)) + " images but " +
                                std::to_string(labels.size()) + " labels");
  for (int l : labels)
    if (l < 0 || l >= classes) throw std::invalid_argument("dataset: label " + std::to_string(l) + " outside [0, classes)");
}

Tensor Dataset::gather(std::span<const std::size_t> idx) const {
  const std::size_t per = images.numel() / std::max<std::size_t>(1, size());
  Shape s = images.shape;
  s[0] = static_cast<int>(idx.size());
  Tensor out(s);
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy_n(images.data.begin() + static_cast<std::ptrdiff_t>(idx[i] * per), per,
                out.data.begin() + static_cast<std::ptrdiff_t>(i * per));
  return out;
}

std::vector<int> Dataset::gather_labels(std::span<const std::size_t> idx) const {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels.at(i));
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
  return Dataset{gather(idx), gather_labels(idx), classes};
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch, std::mt19937_64* rng) {
  if (batch == 0) throw std::invalid_argument("batch size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (rng) std::shuffle(order.begin(), order.end(), *rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t at = 0; at < n; at += batch)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, at + batch)));
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& d, std::size_t first, std::uint64_t seed) {
  if (first > d.size()) throw std::invalid_argument("split: first part larger than dataset");
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::span<const std::size_t> all(order);
  return {d.subset(all.first(first)), d.subset(all.subspan(first))};
}

}  // namespace shiftnas
