#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "glow/training.hpp"

namespace glow {

// Flat `key = value` file with '#' comments. Later assignments win.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig from_file(const std::filesystem::path& path);
  static KeyValueConfig from_string(const std::string& text, const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  double get_real(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// TrainConfig keys (d, learning_rate, batch_size, max_epochs, patience,
// lambda, alpha, gnn_layers, fusion_layers, fusion_heads, seed, ...) read
// from a KeyValueConfig, with defaults for anything unset.
TrainConfig train_config_from(const KeyValueConfig& kv);

// Resolved snapshot of every setting a run used, written to the output
// directory before any work happens.
std::string resolved_config_json(const KeyValueConfig& kv, const std::string& subcommand);

}  // namespace glow
