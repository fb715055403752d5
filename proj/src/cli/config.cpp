// SPDX-FileCopyrightText: 2026 The shiftnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftnas/cli/config.hpp"

#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace shiftnas::cli {

using nlohmann::json;

// ---------------------------------------------------------------------------
// TOML subset

namespace {

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : text_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (skip_blank_lines()) {
      if (peek() == '[') {
        table = &open_table(root);
      } else {
        const std::string key = parse_key();
        skip_ws();
        expect('=');
        skip_ws();
        if (table->contains(key)) fail("duplicate key '" + key + "'");
        (*table)[key] = parse_value();
      }
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("config line " + std::to_string(line_) + ": " + msg);
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  bool eof() const { return pos_ >= text_.size(); }
  char get() {
    const char c = peek();
    if (c == '\n') ++line_;
    ++pos_;
    return c;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }
  void skip_ws() {
    while (peek() == ' ' || peek() == '\t') get();
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') get();
  }
  // Skips whitespace, comments and newlines; false at end of input.
  bool skip_blank_lines() {
    for (;;) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        get();
        continue;
      }
      return !eof();
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') get();
    if (!eof() && peek() != '\n') fail("unexpected trailing characters");
  }

  json& open_table(json& root) {
    get();
    if (peek() == '[') fail("arrays of tables are not supported");
    json* t = &root;
    for (;;) {
      skip_ws();
      const std::string part = parse_key();
      if (!t->contains(part)) (*t)[part] = json::object();
      t = &(*t)[part];
      if (!t->is_object()) fail("'" + part + "' is not a table");
      skip_ws();
      if (peek() == '.') {
        get();
        continue;
      }
      expect(']');
      return *t;
    }
  }

  std::string parse_key() {
    if (peek() == '"') return parse_basic_string();
    std::string key;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-') key += get();
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::string parse_basic_string() {
    expect('"');
    std::string s;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == '"') return s;
      if (c != '\\') {
        s += c;
        continue;
      }
      const char e = get();
      switch (e) {
        case 'n': s += '\n'; break;
        case 't': s += '\t'; break;
        case '"': s += '"'; break;
        case '\\': s += '\\'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string parse_literal_string() {
    expect('\'');
    std::string s;
    while (peek() != '\'') {
      if (eof() || peek() == '\n') fail("unterminated string");
      s += get();
    }
    get();
    return s;
  }

  json parse_value() {
    const char c = peek();
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array();
    if (c == '{') fail("inline tables are not supported");
    std::string tok;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || std::string("+-._").find(peek()) != std::string::npos))
      tok += get();
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.empty()) fail("expected a value");
    std::string digits;
    for (char ch : tok)
      if (ch != '_') digits += ch;
    const bool is_float = digits.find_first_of(".eE") != std::string::npos;
    try {
      std::size_t used = 0;
      if (is_float) {
        const double v = std::stod(digits, &used);
        if (used == digits.size()) return v;
      } else {
        const long long v = std::stoll(digits, &used, 10);
        if (used == digits.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("invalid value '" + tok + "'");
  }

  json parse_array() {
    expect('[');
    json arr = json::array();
    for (;;) {
      skip_blank_lines();
      if (peek() == ']') {
        get();
        return arr;
      }
      arr.push_back(parse_value());
      skip_blank_lines();
      if (peek() == ',') {
        get();
        continue;
      }
      skip_blank_lines();
      expect(']');
      return arr;
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace

json parse_toml(const std::string& text) { return TomlParser(text).parse(); }

// ---------------------------------------------------------------------------
// Presets

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "toy") {
    c.seed = 1;
    c.data.kind = "synthetic-2d";
    c.data.pattern = "spirals";
    c.data.samples = 512;
    c.data.test_samples = 256;
    c.data.image_size = 8;
    c.data.classes = 2;
    c.search.net = {.cells = 5, .channels = 8, .nodes = 4};
    c.search.phase1_epochs = 5;
    c.search.phase2_epochs = 5;
    c.search.batch_size = 32;
    // A handful of epochs leaves 3e-4 too small to move the logits at all.
    c.search.arch_opt.lr = 3e-3;
    c.train.epochs = 20;
    c.train.net = {.cells = 8, .channels = 16};
    c.train.genotype = "cifar10";
  } else if (name == "paper-cifar") {
    c.seed = 2;
    c.data.kind = "raw-binary-cifar";
    c.data.cifar_dir = "data/cifar-10-batches-bin";
    c.data.image_size = 32;
    c.data.classes = 10;
    c.data.mean = {0.4914, 0.4822, 0.4465};
    c.data.std = {0.2470, 0.2435, 0.2616};
    c.data.heldout_fraction = 0.0;
    c.search.net = {.cells = 8, .channels = 16, .nodes = 4};
    c.search.phase1_epochs = 30;
    c.search.phase2_epochs = 40;
    c.search.batch_size = 64;
    c.train.epochs = 200;
    c.train.batch_size = 96;
    c.train.net = {.cells = 20, .channels = 36};
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (expected toy or paper-cifar)");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Overrides

namespace {

using Setter = std::function<void(const json&)>;

template <typename T>
T as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config key '" + key + "' has the wrong type");
  }
}

void apply_section(const json& j, const std::string& section, const std::map<std::string, Setter>& setters) {
  if (!j.is_object()) throw std::invalid_argument("config section '" + section + "' must be a table");
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw std::invalid_argument("unknown config key '" + section + "." + key + "'");
    it->second(value);
  }
}

#define SN_SET(field, type, key) \
  { key, [&](const json& v) { field = as<type>(v, key); } }

shift::SteRule ste_from_string(const std::string& s) {
  if (s == "paper") return shift::SteRule::paper;
  if (s == "analytic") return shift::SteRule::analytic;
  throw std::invalid_argument("unknown ste rule '" + s + "' (expected paper or analytic)");
}

bool rectified_from_string(const std::string& s) {
  if (s == "radam") return true;
  if (s == "adam") return false;
  throw std::invalid_argument("unknown optimizer '" + s + "' (expected radam or adam)");
}

}  // namespace

void apply_overrides(RunConfig& c, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a table");
  for (const auto& [key, value] : j.items()) {
    if (key == "preset") continue;
    if (key == "seed") {
      const auto s = as<long long>(value, "seed");
      if (s < 0) throw std::invalid_argument("seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "data") {
      auto& d = c.data;
      apply_section(value, key,
                    {SN_SET(d.kind, std::string, "kind"), SN_SET(d.pattern, std::string, "pattern"),
                     SN_SET(d.samples, int, "samples"), SN_SET(d.test_samples, int, "test_samples"),
                     SN_SET(d.image_size, int, "image_size"), SN_SET(d.noise, double, "noise"),
                     SN_SET(d.classes, int, "classes"), SN_SET(d.train_images, std::string, "train_images"),
                     SN_SET(d.train_labels, std::string, "train_labels"), SN_SET(d.test_images, std::string, "test_images"),
                     SN_SET(d.test_labels, std::string, "test_labels"), SN_SET(d.cifar_dir, std::string, "cifar_dir"),
                     SN_SET(d.mean, std::vector<double>, "mean"), SN_SET(d.std, std::vector<double>, "std"),
                     SN_SET(d.heldout_fraction, double, "heldout_fraction")});
    } else if (key == "supernet") {
      auto& n = c.search.net;
      apply_section(value, key,
                    {SN_SET(n.cells, int, "cells"), SN_SET(n.channels, int, "channels"), SN_SET(n.nodes, int, "nodes"),
                     SN_SET(n.reductions, std::vector<int>, "reductions"),
                     SN_SET(n.stem_multiplier, int, "stem_multiplier")});
    } else if (key == "search") {
      auto& s = c.search;
      apply_section(
          value, key,
          {SN_SET(s.phase1_epochs, int, "phase1_epochs"), SN_SET(s.phase2_epochs, int, "phase2_epochs"),
           SN_SET(s.batch_size, int, "batch_size"), SN_SET(s.w_opt.lr, double, "lr"),
           SN_SET(s.w_opt.weight_decay, double, "weight_decay"), SN_SET(s.arch_opt.lr, double, "arch_lr"),
           SN_SET(s.arch_opt.weight_decay, double, "arch_weight_decay"), SN_SET(s.lambda, double, "lambda"),
           SN_SET(s.T0, double, "T0"), SN_SET(s.T_end, double, "T_end"), SN_SET(s.lr_reset, bool, "lr_reset"),
           {"optimizer", [&](const json& v) { s.w_opt.rectified = rectified_from_string(as<std::string>(v, "optimizer")); }},
           {"regularizer", [&](const json& v) { s.reg = search::reg_from_string(as<std::string>(v, "regularizer")); }},
           {"domain", [&](const json& v) { s.domain = nn::domain_from_string(as<std::string>(v, "domain")); }},
           {"ste", [&](const json& v) { s.shift.rule = ste_from_string(as<std::string>(v, "ste")); }}});
    } else if (key == "train") {
      auto& t = c.train;
      apply_section(
          value, key,
          {SN_SET(t.epochs, int, "epochs"), SN_SET(t.batch_size, int, "batch_size"), SN_SET(t.opt.lr, double, "lr"),
           SN_SET(t.opt.weight_decay, double, "weight_decay"), SN_SET(t.lambda, double, "lambda"),
           SN_SET(t.genotype, std::string, "genotype"), SN_SET(t.net.cells, int, "cells"),
           SN_SET(t.net.channels, int, "channels"), SN_SET(t.net.reductions, std::vector<int>, "reductions"),
           SN_SET(t.net.stem_multiplier, int, "stem_multiplier"),
           {"optimizer", [&](const json& v) { t.opt.rectified = rectified_from_string(as<std::string>(v, "optimizer")); }},
           {"regularizer", [&](const json& v) { t.reg = search::reg_from_string(as<std::string>(v, "regularizer")); }},
           {"domain", [&](const json& v) { t.domain = nn::domain_from_string(as<std::string>(v, "domain")); }}});
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
}

#undef SN_SET

RunConfig load_config(const std::filesystem::path& path, const std::string& default_preset) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  json j;
  if (path.extension() == ".json") {
    try {
      j = json::parse(ss.str());
    } catch (const json::exception& e) {
      throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
  } else {
    j = parse_toml(ss.str());
  }
  RunConfig c = preset(j.contains("preset") ? as<std::string>(j["preset"], "preset") : default_preset);
  apply_overrides(c, j);
  return c;
}

void validate(const RunConfig& c) {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw std::invalid_argument(std::string(what) + " must be positive");
  };
  const auto& d = c.data;
  if (d.kind == "synthetic-2d") {
    positive(d.samples, "data.samples");
    positive(d.test_samples, "data.test_samples");
    if (d.pattern != "spirals" && d.pattern != "gaussians")
      throw std::invalid_argument("data.pattern must be spirals or gaussians");
  } else if (d.kind == "idx-images") {
    for (const auto* p : {&d.train_images, &d.train_labels, &d.test_images, &d.test_labels})
      if (p->empty() || !std::filesystem::exists(*p))
        throw std::invalid_argument("data file '" + p->string() + "' does not exist");
  } else if (d.kind == "raw-binary-cifar") {
    if (!std::filesystem::is_directory(d.cifar_dir))
      throw std::invalid_argument("CIFAR directory '" + d.cifar_dir.string() + "' does not exist");
  } else {
    throw std::invalid_argument("data.kind must be idx-images, synthetic-2d or raw-binary-cifar");
  }
  positive(d.image_size, "data.image_size");
  if (d.classes < 2) throw std::invalid_argument("data.classes must be at least 2");
  if (d.mean.size() != d.std.size()) throw std::invalid_argument("data.mean and data.std must have the same length");
  for (double s : d.std)
    if (!(s > 0)) throw std::invalid_argument("data.std entries must be positive");
  if (d.heldout_fraction < 0 || d.heldout_fraction >= 1) throw std::invalid_argument("data.heldout_fraction must be in [0, 1)");

  const auto& s = c.search;
  positive(s.net.cells, "supernet.cells");
  positive(s.net.channels, "supernet.channels");
  positive(s.net.nodes, "supernet.nodes");
  space::resolve_reductions(s.net);
  positive(s.batch_size, "search.batch_size");
  if (s.phase1_epochs < 0 || s.phase2_epochs < 0) throw std::invalid_argument("search epochs must be >= 0");
  if (s.lambda < 0 || c.train.lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  if (!(s.T0 > 0) || !(s.T_end > 0)) throw std::invalid_argument("temperatures must be positive");
  if (s.w_opt.lr < 0 || s.arch_opt.lr < 0 || c.train.opt.lr < 0) throw std::invalid_argument("learning rates must be >= 0");

  positive(c.train.epochs, "train.epochs");
  positive(c.train.batch_size, "train.batch_size");
  positive(c.train.net.cells, "train.cells");
  positive(c.train.net.channels, "train.channels");
  space::resolve_reductions({.cells = c.train.net.cells, .reductions = c.train.net.reductions});
}

json to_json(const RunConfig& c) {
  const auto& d = c.data;
  const auto& s = c.search;
  const auto& t = c.train;
  auto reg = [](search::RegKind k) {
    return k == search::RegKind::modified ? "modified" : k == search::RegKind::conventional ? "conventional" : "none";
  };
  return {
      {"preset", c.preset},
      {"seed", c.seed},
      {"data",
       {{"kind", d.kind}, {"pattern", d.pattern}, {"samples", d.samples}, {"test_samples", d.test_samples},
        {"image_size", d.image_size}, {"noise", d.noise}, {"classes", d.classes},
        {"train_images", d.train_images.string()}, {"train_labels", d.train_labels.string()},
        {"test_images", d.test_images.string()}, {"test_labels", d.test_labels.string()},
        {"cifar_dir", d.cifar_dir.string()}, {"mean", d.mean}, {"std", d.std}, {"heldout_fraction", d.heldout_fraction}}},
      {"supernet",
       {{"cells", s.net.cells}, {"channels", s.net.channels}, {"nodes", s.net.nodes}, {"reductions", s.net.reductions},
        {"stem_multiplier", s.net.stem_multiplier}}},
      {"search",
       {{"phase1_epochs", s.phase1_epochs}, {"phase2_epochs", s.phase2_epochs}, {"batch_size", s.batch_size},
        {"optimizer", s.w_opt.rectified ? "radam" : "adam"}, {"lr", s.w_opt.lr}, {"weight_decay", s.w_opt.weight_decay},
        {"arch_lr", s.arch_opt.lr}, {"arch_weight_decay", s.arch_opt.weight_decay}, {"lambda", s.lambda},
        {"regularizer", reg(s.reg)}, {"T0", s.T0}, {"T_end", s.T_end}, {"lr_reset", s.lr_reset},
        {"domain", nn::to_string(s.domain)}, {"ste", s.shift.rule == shift::SteRule::paper ? "paper" : "analytic"}}},
      {"train",
       {{"epochs", t.epochs}, {"batch_size", t.batch_size}, {"optimizer", t.opt.rectified ? "radam" : "adam"},
        {"lr", t.opt.lr}, {"weight_decay", t.opt.weight_decay}, {"lambda", t.lambda}, {"regularizer", reg(t.reg)},
        {"domain", nn::to_string(t.domain)}, {"genotype", t.genotype}, {"cells", t.net.cells},
        {"channels", t.net.channels}, {"reductions", t.net.reductions}, {"stem_multiplier", t.net.stem_multiplier}}},
  };
}

}  // namespace shiftnas::cli
