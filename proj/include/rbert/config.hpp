#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "rbert/common.hpp"
#include "rbert/model.hpp"
#include "rbert/trainer.hpp"

namespace rbert {

// Flat `key = value` experiment config. '#' starts a comment.
inline std::map<std::string, std::string> parse_config(
    const std::string& content) {
  std::map<std::string, std::string> out;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string t = detail::trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw parse_error("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty()) {
      throw parse_error("config line " + std::to_string(line_no) +
                        ": empty key");
    }
    out[key] = value;
  }
  return out;
}

inline std::map<std::string, std::string> load_config_file(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

class ConfigView {
 public:
  explicit ConfigView(std::map<std::string, std::string> kv)
      : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& dflt = "") const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }

  long integer(const std::string& key, long dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    try {
      return std::stol(it->second);
    } catch (const std::exception&) {
      throw data_error("config: bad integer for " + key + ": " + it->second);
    }
  }

  double real(const std::string& key, double dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw data_error("config: bad number for " + key + ": " + it->second);
    }
  }

  const std::map<std::string, std::string>& raw() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

// Builds a TrainConfig from a config map. `profile` selects the defaults
// (finetune or scratch); explicit keys override.
inline TrainConfig train_config_from(const ConfigView& cfg) {
  std::string profile = cfg.str("profile", "scratch");
  TrainConfig c;
  if (profile == "finetune") {
    c = profile_finetune();
  } else if (profile == "scratch") {
    c = profile_scratch();
  } else {
    throw data_error("config: unknown profile " + profile);
  }
  c.batch_size = static_cast<int>(cfg.integer("batch_size", c.batch_size));
  c.max_len = static_cast<int>(cfg.integer("max_len", c.max_len));
  c.learning_rate = cfg.real("learning_rate", c.learning_rate);
  c.epochs = static_cast<int>(cfg.integer("epochs", c.epochs));
  c.dropout = cfg.real("dropout", c.dropout);
  c.seed = static_cast<std::uint64_t>(cfg.integer("seed", 42));
  if (cfg.has("variant")) c.variant = parse_variant(cfg.str("variant"));
  c.layers = static_cast<int>(cfg.integer("layers", c.layers));
  c.hidden = static_cast<int>(cfg.integer("hidden", c.hidden));
  c.heads = static_cast<int>(cfg.integer("heads", c.heads));
  c.ffn = static_cast<int>(cfg.integer("ffn", c.ffn));
  c.validate();
  return c;
}

inline ModelConfig model_config_from(const TrainConfig& tc, int vocab_size,
                                     int num_labels) {
  ModelConfig mc;
  mc.encoder.vocab_size = vocab_size;
  mc.encoder.max_len = tc.max_len;
  mc.encoder.hidden = tc.hidden;
  mc.encoder.layers = tc.layers;
  mc.encoder.heads = tc.heads;
  mc.encoder.ffn = tc.ffn;
  mc.num_labels = num_labels;
  mc.dropout = tc.dropout;
  mc.variant = tc.variant;
  return mc;
}

}  // namespace rbert
