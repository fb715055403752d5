// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace shiftnas::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'N', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is, const std::string& what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("checkpoint: truncated " + what);
  return v;
}

}  // namespace

const CheckpointTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["version"] = kCheckpointVersion;
  header["domain"] = to_string(ckpt.domain);
  header["meta"] = ckpt.meta;
  header["shift_code"] =
      "5 bits per weight, LSB-first; bits 0-3 = -round(P), bit 4 = negative; code 15 = zero weight; "
      "blob = u8 rank, u32 LE dims, packed codes";
  nlohmann::json list = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    list.push_back({{"name", t.name}, {"kind", t.kind}, {"shape", t.shape}, {"offset", offset}, {"bytes", t.bytes.size()}});
    offset += t.bytes.size();
  }
  header["tensors"] = list;
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path.string());
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : ckpt.tensors) os.write(reinterpret_cast<const char*>(t.bytes.data()), static_cast<std::streamsize>(t.bytes.size()));
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("checkpoint: " + path.string() + " is not a shiftnas checkpoint (bad magic)");
  const auto version = get<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  const auto header_len = get<std::uint64_t>(is, "header length");
  std::string text(header_len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(header_len))) throw std::runtime_error("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: malformed header: ") + e.what());
  }
  const std::streamoff payload = is.tellg();

  Checkpoint ckpt;
  ckpt.domain = domain_from_string(header.at("domain").get<std::string>());
  ckpt.meta = header.value("meta", nlohmann::json::object());
  for (const auto& e : header.at("tensors")) {
    CheckpointTensor t;
    t.name = e.at("name").get<std::string>();
    t.kind = e.at("kind").get<std::string>();
    if (t.kind != "shift5" && t.kind != "f64") throw std::runtime_error("checkpoint: unknown tensor kind '" + t.kind + "'");
    t.shape = e.at("shape").get<Shape>();
    const auto offset = e.at("offset").get<std::uint64_t>();
    t.bytes.resize(e.at("bytes").get<std::size_t>());
    is.seekg(payload + static_cast<std::streamoff>(offset));
    if (!is.read(reinterpret_cast<char*>(t.bytes.data()), static_cast<std::streamsize>(t.bytes.size())))
      throw std::runtime_error("checkpoint: truncated payload for " + t.name);
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

CheckpointTensor pack_real(const std::string& name, const Tensor& t) {
  CheckpointTensor out{name, "f64", t.shape, std::vector<std::uint8_t>(t.numel() * sizeof(double))};
  std::memcpy(out.bytes.data(), t.data.data(), out.bytes.size());
  return out;
}

Tensor unpack_real(const CheckpointTensor& t) {
  if (t.kind != "f64") throw std::runtime_error("checkpoint: " + t.name + " is not an f64 tensor");
  Tensor out(t.shape);
  if (t.bytes.size() != out.numel() * sizeof(double))
    throw std::runtime_error("checkpoint: size mismatch for " + t.name);
  std::memcpy(out.data.data(), t.bytes.data(), t.bytes.size());
  return out;
}

Checkpoint capture(Module& model, Domain domain, nlohmann::json meta) {
  ParamRefs refs;
  model.collect(refs, "");
  Checkpoint ckpt;
  ckpt.domain = domain;
  ckpt.meta = std::move(meta);
  for (auto& [name, conv] : refs.convs) {
    if (conv->domain() != Domain::shift) continue;
    if (conv->shift_weight().numel() > 0) conv->freeze();
    if (!conv->has_view()) throw std::logic_error("checkpoint: shift layer " + name + " has no weights");
    ckpt.tensors.push_back({join_name(name, "weight"), "shift5", conv->weight_shape(), shift::encode_view(conv->view())});
  }
  for (auto& [name, p] : refs.real) ckpt.tensors.push_back(pack_real(name, p->value));
  for (auto& [name, b] : refs.buffers) ckpt.tensors.push_back(pack_real(name, *b));
  return ckpt;
}

namespace {
const CheckpointTensor& require(const Checkpoint& ckpt, const std::string& name, const char* kind, const Shape& shape) {
  const CheckpointTensor* t = ckpt.find(name);
  if (!t) throw std::runtime_error("checkpoint: missing tensor " + name);
  if (t->kind != kind) throw std::runtime_error("checkpoint: tensor " + name + " has kind " + t->kind + ", expected " + kind);
  if (t->shape != shape)
    throw std::runtime_error("checkpoint: tensor " + name + " has shape " + shape_str(t->shape) + ", model expects " +
                             shape_str(shape));
  return *t;
}
}  // namespace

void restore(const Checkpoint& ckpt, Module& model) {
  ParamRefs refs;
  model.collect(refs, "");
  for (auto& [name, conv] : refs.convs) {
    if (conv->domain() != Domain::shift) continue;
    const auto& t = require(ckpt, join_name(name, "weight"), "shift5", conv->weight_shape());
    conv->set_view(shift::decode_view(t.bytes));
  }
  for (auto& [name, p] : refs.real) p->value = unpack_real(require(ckpt, name, "f64", p->value.shape));
  for (auto& [name, b] : refs.buffers) *b = unpack_real(require(ckpt, name, "f64", b->shape));
}

}  // namespace shiftnas::nn
