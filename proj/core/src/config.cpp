#include "glow/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "glow/error.hpp"

namespace glow {

namespace {

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_string(const std::string& text, const std::string& origin) {
  KeyValueConfig kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (key.empty())
      throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
    kv.values_[key] = value;
  }
  return kv;
}

KeyValueConfig KeyValueConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path.string());
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    long v = std::stol(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + it->second + "' is not an integer");
  }
}

double KeyValueConfig::get_real(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + it->second + "' is not a number");
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
  if (it->second == "false" || it->second == "0" || it->second == "no") return false;
  throw ConfigError("config key '" + key + "': '" + it->second + "' is not a boolean");
}

TrainConfig train_config_from(const KeyValueConfig& kv) {
  TrainConfig c;
  c.d = static_cast<int>(kv.get_int("d", c.d));
  c.learning_rate = kv.get_real("learning_rate", c.learning_rate);
  c.weight_decay = kv.get_real("weight_decay", c.weight_decay);
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.max_epochs = static_cast<int>(kv.get_int("max_epochs", c.max_epochs));
  c.patience = static_cast<int>(kv.get_int("patience", c.patience));
  c.lambda = kv.get_real("lambda", c.lambda);
  c.alpha = kv.get_real("alpha", c.alpha);
  c.gnn_layers = static_cast<int>(kv.get_int("gnn_layers", c.gnn_layers));
  c.fusion_layers = static_cast<int>(kv.get_int("fusion_layers", c.fusion_layers));
  c.fusion_heads = static_cast<int>(kv.get_int("fusion_heads", c.fusion_heads));
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long>(c.seed)));
  c.positive_class_weight = kv.get_real("positive_class_weight", c.positive_class_weight);
  c.pretrain_steps = static_cast<int>(kv.get_int("pretrain_steps", c.pretrain_steps));
  c.pretrain_learning_rate = kv.get_real("pretrain_learning_rate", c.pretrain_learning_rate);
  c.validate();
  return c;
}

std::string resolved_config_json(const KeyValueConfig& kv, const std::string& subcommand) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["subcommand"] = subcommand;
  nlohmann::ordered_json settings = nlohmann::ordered_json::object();
  for (const auto& [k, v] : kv.values()) settings[k] = v;
  j["settings"] = settings;
  return j.dump(2) + "\n";
}

}  // namespace glow
