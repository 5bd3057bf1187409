#ifndef CROSSMODAL_CONFIG_HPP
#define CROSSMODAL_CONFIG_HPP

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "crossmodal/errors.hpp"
#include "crossmodal/train.hpp"

namespace crossmodal {

// Flat `key = value` text config. '#' starts a comment; blank lines ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig from_stream(std::istream& is) {
    KeyValueConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static KeyValueConfig from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    return from_stream(is);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': not a number: " + it->second);
    }
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': not a non-negative integer: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false: " + it->second);
  }

  // Comma-separated u64 list.
  std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                          std::vector<std::uint64_t> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::uint64_t> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      try {
        out.push_back(std::stoull(item));
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': bad list element: " + item);
      }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  std::map<std::string, std::string> values_;
};

inline Backbone parse_backbone(const std::string& s) {
  if (s == "rnn") return Backbone::Rnn;
  if (s == "transformer") return Backbone::Transformer;
  if (s == "netvlad") return Backbone::NetVlad;
  throw ConfigError("unknown backbone '" + s + "' (expected rnn, transformer, or netvlad)");
}

inline FusionVariant parse_variant(const std::string& s) {
  if (s == "E") return FusionVariant::Early;
  if (s == "L") return FusionVariant::Late;
  if (s == "CM-G") return FusionVariant::CrossModalGated;
  if (s == "CM-C") return FusionVariant::CrossModalConcat;
  throw ConfigError("unknown variant '" + s + "' (expected E, L, CM-G, or CM-C)");
}

inline std::vector<Backbone> parse_backbone_list(const std::string& s) {
  std::vector<Backbone> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_backbone(item));
  if (out.empty()) throw ConfigError("empty backbone list");
  return out;
}

inline std::vector<FusionVariant> parse_variant_list(const std::string& s) {
  std::vector<FusionVariant> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_variant(item));
  if (out.empty()) throw ConfigError("empty variant list");
  return out;
}

// Documented schema; unknown keys are rejected so typos fail loudly.
inline SuiteConfig apply_config(const KeyValueConfig& kv, SuiteConfig base = {}) {
  static const char* known[] = {
      "synth.num_categories", "synth.children_per_category", "synth.leaves_per_child",
      "synth.examples_per_class", "synth.frames", "synth.dim_video", "synth.dim_audio",
      "synth.fraction_uncorrelated", "synth.noise_sigma", "synth.seed", "synth.bump_width",
      "synth.shift_delta", "synth.bump_amp", "synth.theme_amp", "synth.train_fraction",
      "synth.valid_fraction",
      "train.lr", "train.beta1", "train.beta2", "train.eps", "train.batch_size",
      "train.max_epochs", "train.scheduler_factor", "train.scheduler_patience", "train.seed",
      "corr.lr", "corr.batch_size", "corr.epochs", "corr.w_neg", "corr.threshold",
      "corr.hard_negative_mining", "corr.seed",
      "model.rnn_hidden", "model.heads", "model.head_dim", "model.clusters_v",
      "model.clusters_a", "model.head_hidden", "model.gate_threshold", "model.corr_feature_scale",
      "model.backbone", "model.variant",
      "suite.backbones", "suite.variants", "suite.seeds", "suite.test_resamples",
      "suite.threads", "suite.top_k",
  };
  for (const auto& [key, value] : kv.values()) {
    (void)value;
    bool ok = false;
    for (const char* k : known)
      if (key == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown config key: " + key);
  }

  SuiteConfig c = base;
  auto& sy = c.synth;
  sy.num_categories = kv.get_u64("synth.num_categories", sy.num_categories);
  sy.children_per_category = kv.get_u64("synth.children_per_category", sy.children_per_category);
  sy.leaves_per_child = kv.get_u64("synth.leaves_per_child", sy.leaves_per_child);
  sy.examples_per_class = kv.get_u64("synth.examples_per_class", sy.examples_per_class);
  sy.frames = kv.get_u64("synth.frames", sy.frames);
  sy.dim_video = kv.get_u64("synth.dim_video", sy.dim_video);
  sy.dim_audio = kv.get_u64("synth.dim_audio", sy.dim_audio);
  sy.fraction_uncorrelated = kv.get_double("synth.fraction_uncorrelated", sy.fraction_uncorrelated);
  sy.noise_sigma = kv.get_double("synth.noise_sigma", sy.noise_sigma);
  sy.seed = kv.get_u64("synth.seed", sy.seed);
  sy.bump_width = kv.get_u64("synth.bump_width", sy.bump_width);
  sy.shift_delta = kv.get_u64("synth.shift_delta", sy.shift_delta);
  sy.bump_amp = kv.get_double("synth.bump_amp", sy.bump_amp);
  sy.theme_amp = kv.get_double("synth.theme_amp", sy.theme_amp);
  sy.train_fraction = kv.get_double("synth.train_fraction", sy.train_fraction);
  sy.valid_fraction = kv.get_double("synth.valid_fraction", sy.valid_fraction);

  auto& tr = c.train;
  tr.adam.lr = kv.get_double("train.lr", tr.adam.lr);
  tr.adam.beta1 = kv.get_double("train.beta1", tr.adam.beta1);
  tr.adam.beta2 = kv.get_double("train.beta2", tr.adam.beta2);
  tr.adam.eps = kv.get_double("train.eps", tr.adam.eps);
  tr.batch_size = kv.get_u64("train.batch_size", tr.batch_size);
  tr.max_epochs = kv.get_u64("train.max_epochs", tr.max_epochs);
  tr.scheduler_factor = kv.get_double("train.scheduler_factor", tr.scheduler_factor);
  tr.scheduler_patience = kv.get_u64("train.scheduler_patience", tr.scheduler_patience);
  tr.seed = kv.get_u64("train.seed", tr.seed);

  auto& co = c.corr;
  co.adam.lr = kv.get_double("corr.lr", co.adam.lr);
  co.batch_size = kv.get_u64("corr.batch_size", co.batch_size);
  co.epochs = kv.get_u64("corr.epochs", co.epochs);
  co.w_neg = kv.get_double("corr.w_neg", co.w_neg);
  co.threshold = kv.get_double("corr.threshold", co.threshold);
  co.hard_negative_mining = kv.get_bool("corr.hard_negative_mining", co.hard_negative_mining);
  co.seed = kv.get_u64("corr.seed", co.seed);

  auto& m = c.model;
  m.rnn_hidden = kv.get_u64("model.rnn_hidden", m.rnn_hidden);
  m.heads = kv.get_u64("model.heads", m.heads);
  m.head_dim = kv.get_u64("model.head_dim", m.head_dim);
  m.clusters_v = kv.get_u64("model.clusters_v", m.clusters_v);
  m.clusters_a = kv.get_u64("model.clusters_a", m.clusters_a);
  m.head_hidden = kv.get_u64("model.head_hidden", m.head_hidden);
  m.gate_threshold = kv.get_double("model.gate_threshold", m.gate_threshold);
  m.corr_feature_scale = kv.get_double("model.corr_feature_scale", m.corr_feature_scale);
  if (kv.has("model.backbone")) m.backbone = parse_backbone(kv.get_string("model.backbone", ""));
  if (kv.has("model.variant")) m.variant = parse_variant(kv.get_string("model.variant", ""));

  if (kv.has("suite.backbones"))
    c.backbones = parse_backbone_list(kv.get_string("suite.backbones", ""));
  if (kv.has("suite.variants"))
    c.variants = parse_variant_list(kv.get_string("suite.variants", ""));
  c.seeds = kv.get_u64_list("suite.seeds", c.seeds);
  c.test_resamples = kv.get_u64("suite.test_resamples", c.test_resamples);
  c.threads = kv.get_u64("suite.threads", c.threads);
  c.top_k = kv.get_u64("suite.top_k", c.top_k);
  return c;
}

}  // namespace crossmodal

#endif
