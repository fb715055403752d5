// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "shiftnas/nn/layers.hpp"

// Checkpoint container
//
//   bytes 0..7   magic "SNCKPT01"
//   u32 LE       format version
//   u64 LE       header length H
//   H bytes      UTF-8 JSON header
//   payload      tensor blobs, located by the header's offset/bytes fields
//
// Header keys: "version", "domain" ("shift" | "real"), "meta" (free-form),
// "shift_code" (description of the 5-bit code), "tensors": a list of
// {name, kind, shape, offset, bytes}. kind "shift5" is a shiftparam blob
// (shape header + packed 5-bit codes); kind "f64" is raw little-endian doubles.

namespace shiftnas::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
  std::string name;
  std::string kind;  // "shift5" or "f64"
  Shape shape;
  std::vector<std::uint8_t> bytes;
};

struct Checkpoint {
  Domain domain = Domain::shift;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws std::runtime_error for an unreadable, truncated or foreign file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

CheckpointTensor pack_real(const std::string& name, const Tensor& t);
Tensor unpack_real(const CheckpointTensor& t);

// Snapshot of a module tree: shift convolutions as packed codes of their
// rounded weights, everything else (real weights, BN affine, biases, running
// statistics) as f64.
Checkpoint capture(Module& model, Domain domain, nlohmann::json meta = nlohmann::json::object());

// Loads every tensor of `model` from `ckpt`. Shift convolutions receive their
// quantized view only (sufficient for the fixed path). Throws on a missing
// tensor, a kind mismatch or a shape mismatch.
void restore(const Checkpoint& ckpt, Module& model);

}  // namespace shiftnas::nn
