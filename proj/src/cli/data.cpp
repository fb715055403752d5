// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/cli/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

namespace shiftnas::cli {

namespace {
std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}
}  // namespace

IdxArray parse_idx(std::span<const std::uint8_t> b) {
  if (b.size() < 4) throw IdxError("IDX header truncated", b.size());
  if (b[0] != 0 || b[1] != 0) throw IdxError("bad IDX magic: first two bytes must be zero", b[0] != 0 ? 0 : 1);
  if (b[2] != 0x08) throw IdxError("unsupported IDX element type 0x" + [&] {
                                     char buf[3];
                                     std::snprintf(buf, sizeof buf, "%02x", b[2]);
                                     return std::string(buf);
                                   }() + " (only unsigned bytes are supported)",
                                   2);
  const int rank = b[3];
  if (rank == 0) throw IdxError("IDX array has no dimensions", 3);
  const std::size_t header = 4 + 4 * static_cast<std::size_t>(rank);
  if (b.size() < header) throw IdxError("IDX dimension table truncated", b.size());
  IdxArray a;
  std::size_t count = 1;
  for (int i = 0; i < rank; ++i) {
    const std::size_t at = 4 + 4 * static_cast<std::size_t>(i);
    const std::uint32_t d = (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
                            (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
    if (d == 0 || d > (1u << 30)) throw IdxError("invalid IDX dimension " + std::to_string(d), at);
    a.dims.push_back(static_cast<int>(d));
    count *= d;
  }
  if (b.size() < header + count)
    throw IdxError("IDX payload truncated: expected " + std::to_string(count) + " bytes", b.size());
  if (b.size() > header + count) throw IdxError("unexpected trailing bytes after IDX payload", header + count);
  a.data.assign(b.begin() + static_cast<std::ptrdiff_t>(header), b.end());
  return a;
}

IdxArray load_idx(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_idx(bytes);
  } catch (const IdxError& e) {
    throw IdxError(path.string() + ": " + std::string(e.what()).substr(0, std::string(e.what()).rfind(" (at byte")),
                   e.offset());
  }
}

void write_idx(const std::filesystem::path& path, const IdxArray& a) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.put(0).put(0).put(0x08).put(static_cast<char>(a.dims.size()));
  for (int d : a.dims)
    for (int shift : {24, 16, 8, 0}) os.put(static_cast<char>((static_cast<std::uint32_t>(d) >> shift) & 0xFF));
  os.write(reinterpret_cast<const char*>(a.data.data()), static_cast<std::streamsize>(a.data.size()));
}

Dataset dataset_from_idx(const IdxArray& images, const IdxArray& labels, int classes) {
  if (images.dims.size() != 3 && images.dims.size() != 4)
    throw std::invalid_argument("IDX images must be 3-D [N, H, W] or 4-D [N, C, H, W]");
  if (labels.dims.size() != 1) throw std::invalid_argument("IDX labels must be 1-D");
  Shape s = images.dims;
  if (s.size() == 3) s.insert(s.begin() + 1, 1);
  if (labels.dims[0] != s[0])
    throw std::invalid_argument("IDX image count " + std::to_string(s[0]) + " != label count " + std::to_string(labels.dims[0]));
  Dataset d;
  d.images = Tensor(s);
  for (std::size_t i = 0; i < images.data.size(); ++i) d.images[i] = images.data[i] / 255.0;
  d.labels.assign(labels.data.begin(), labels.data.end());
  d.classes = classes;
  d.check();
  return d;
}

Dataset gen_synthetic(const std::string& pattern, int n, int image_size, double noise, std::uint64_t seed) {
  if (pattern != "spirals" && pattern != "gaussians") throw std::invalid_argument("unknown synthetic pattern '" + pattern + "'");
  if (n <= 0 || image_size <= 0) throw std::invalid_argument("synthetic data needs positive sizes");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int S = image_size;
  Dataset d;
  d.classes = 2;
  d.images = Tensor({n, 3, S, S});
  const double sigma = std::max(0.75, S / 8.0);
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    double x, y;
    if (pattern == "spirals") {
      const double t = 0.15 + 0.85 * uni(rng);
      const double angle = 1.5 * std::numbers::pi * t + label * std::numbers::pi;
      x = t * std::cos(angle) + noise * 0.5 * gauss(rng);
      y = t * std::sin(angle) + noise * 0.5 * gauss(rng);
    } else {
      const double c = label ? 0.4 : -0.4;
      x = c + (noise + 0.2) * gauss(rng);
      y = c + (noise + 0.2) * gauss(rng);
    }
    const double px = (x + 1.2) / 2.4 * (S - 1), py = (y + 1.2) / 2.4 * (S - 1);
    double* img = d.images.data.data() + static_cast<std::size_t>(i) * 3 * S * S;
    for (int r = 0; r < S; ++r)
      for (int c = 0; c < S; ++c) {
        const double dd = (r - py) * (r - py) + (c - px) * (c - px);
        img[r * S + c] = std::exp(-dd / (2 * sigma * sigma));
        img[S * S + r * S + c] = x;
        img[2 * S * S + r * S + c] = y;
      }
    d.labels.push_back(label);
  }
  return d;
}

ShapesData gen_shapes(int n, int image_size, std::uint64_t seed) {
  if (n <= 0 || image_size < 8) throw std::invalid_argument("shapes: need n > 0 and image_size >= 8");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int S = image_size;
  ShapesData out;
  out.images.dims = {n, S, S};
  out.labels.dims = {n};
  out.images.data.resize(static_cast<std::size_t>(n) * S * S);
  for (int i = 0; i < n; ++i) {
    const int label = i % 4;
    const double r = S * (0.2 + 0.12 * uni(rng));
    const double cx = r + 0.5 + (S - 2 * r - 1) * uni(rng);
    const double cy = r + 0.5 + (S - 2 * r - 1) * uni(rng);
    const double ink = 0.65 + 0.35 * uni(rng);
    for (int y = 0; y < S; ++y)
      for (int x = 0; x < S; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        bool on = false;
        switch (label) {
          case 0: on = std::abs(dx) <= r && std::abs(dy) <= r; break;
          case 1: on = dx * dx + dy * dy <= r * r; break;
          case 2: on = (std::abs(dx) <= r && std::abs(dy) <= r * 0.3) || (std::abs(dy) <= r && std::abs(dx) <= r * 0.3); break;
          case 3: on = dy <= r && dy >= -r && std::abs(dx) <= (dy + r) * 0.5; break;
        }
        const double v = (on ? ink : 0.0) + 0.15 * uni(rng);
        out.images.data[(static_cast<std::size_t>(i) * S + y) * S + x] =
            static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    out.labels.data.push_back(static_cast<std::uint8_t>(label));
  }
  return out;
}

Dataset load_cifar_bin(const std::vector<std::filesystem::path>& files) {
  constexpr std::size_t kRecord = 1 + 3 * 32 * 32;
  Dataset d;
  d.classes = 10;
  std::vector<double> pixels;
  for (const auto& f : files) {
    const auto bytes = read_file(f);
    if (bytes.size() % kRecord != 0)
      throw std::runtime_error(f.string() + ": size is not a multiple of the 3073-byte CIFAR record");
    for (std::size_t at = 0; at < bytes.size(); at += kRecord) {
      if (bytes[at] > 9) throw std::runtime_error(f.string() + ": label out of range at byte offset " + std::to_string(at));
      d.labels.push_back(bytes[at]);
      for (std::size_t k = 1; k < kRecord; ++k) pixels.push_back(bytes[at + k] / 255.0);
    }
  }
  d.images = Tensor({static_cast<int>(d.labels.size()), 3, 32, 32}, std::move(pixels));
  return d;
}

Normalization measure(const Dataset& d) {
  const int N = d.images.dim(0), C = d.images.dim(1);
  const std::size_t HW = d.images.numel() / (static_cast<std::size_t>(N) * C);
  Normalization n{std::vector<double>(C), std::vector<double>(C)};
  for (int c = 0; c < C; ++c) {
    double s = 0, s2 = 0;
    for (int i = 0; i < N; ++i)
      for (std::size_t l = 0; l < HW; ++l) {
        const double v = d.images[(static_cast<std::size_t>(i) * C + c) * HW + l];
        s += v;
        s2 += v * v;
      }
    const double cnt = static_cast<double>(N) * HW;
    n.mean[c] = s / cnt;
    n.std[c] = std::sqrt(std::max(s2 / cnt - n.mean[c] * n.mean[c], 0.0));
    if (n.std[c] < 1e-6) n.std[c] = 1.0;
  }
  return n;
}

void normalize(Dataset& d, const Normalization& n) {
  const int N = d.images.dim(0), C = d.images.dim(1);
  if (static_cast<int>(n.mean.size()) != C || static_cast<int>(n.std.size()) != C)
    throw std::invalid_argument("normalization has " + std::to_string(n.mean.size()) + " channels, data has " + std::to_string(C));
  const std::size_t HW = d.images.numel() / (static_cast<std::size_t>(N) * C);
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < C; ++c)
      for (std::size_t l = 0; l < HW; ++l) {
        double& v = d.images[(static_cast<std::size_t>(i) * C + c) * HW + l];
        v = (v - n.mean[c]) / n.std[c];
      }
}

LoadedData load_data(const DataSpec& spec, std::uint64_t seed) {
  LoadedData out;
  if (spec.kind == "synthetic-2d") {
    out.train = gen_synthetic(spec.pattern, spec.samples, spec.image_size, spec.noise, seed);
    out.test = gen_synthetic(spec.pattern, spec.test_samples, spec.image_size, spec.noise, seed + 0x9e3779b97f4a7c15ULL);
  } else if (spec.kind == "idx-images") {
    out.train = dataset_from_idx(load_idx(spec.train_images), load_idx(spec.train_labels), spec.classes);
    out.test = dataset_from_idx(load_idx(spec.test_images), load_idx(spec.test_labels), spec.classes);
  } else if (spec.kind == "raw-binary-cifar") {
    std::vector<std::filesystem::path> train;
    for (int i = 1; i <= 5; ++i)
      if (auto p = spec.cifar_dir / ("data_batch_" + std::to_string(i) + ".bin"); std::filesystem::exists(p)) train.push_back(p);
    if (train.empty()) throw std::runtime_error("no data_batch_*.bin files in " + spec.cifar_dir.string());
    out.train = load_cifar_bin(train);
    out.test = load_cifar_bin({spec.cifar_dir / "test_batch.bin"});
  } else {
    throw std::invalid_argument("unknown data kind '" + spec.kind + "'");
  }
  out.norm = spec.mean.empty() ? measure(out.train) : Normalization{spec.mean, spec.std};
  normalize(out.train, out.norm);
  normalize(out.test, out.norm);
  return out;
}

}  // namespace shiftnas::cli
