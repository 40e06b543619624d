#include "glow/providers.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

#include "glow/error.hpp"
#include "glow/graph_qa.hpp"
#include "glow/seed.hpp"
#include "glow/textualize.hpp"

// httplib is pulled in by the .cpp only to keep the header light.
#include <httplib.h>

namespace glow {

namespace {

std::vector<std::string> lower_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

}  // namespace

HashedTextProvider::HashedTextProvider(int base_dim) : dim_(base_dim) {
  if (base_dim < 1) throw ConfigError("HashedTextProvider base_dim must be >= 1");
  name_ = "hashed-bow-" + std::to_string(base_dim);
}

Vector HashedTextProvider::embed(const std::string& text) const {
  Vector v = Vector::Zero(dim_);
  for (const auto& w : lower_words(text)) {
    std::uint64_t h = fnv1a64("w:" + w);
    int bucket = static_cast<int>(h % static_cast<std::uint64_t>(dim_));
    double sign = (h >> 63) ? -1.0 : 1.0;
    v[bucket] += sign;
  }
  double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

const std::vector<std::string>& struct_feature_keywords() {
  static const std::vector<std::string> kKeywords = {
      "generate", "review", "test", "merge", "plan",
      "analyze",  "summarize", "debug", "refine", "verify"};
  return kKeywords;
}

StructFeatureProvider::StructFeatureProvider(int base_dim) : dim_(base_dim) {
  int needed = 6 + static_cast<int>(struct_feature_keywords().size());
  if (base_dim < 1) throw ConfigError("StructFeatureProvider base_dim must be >= 1");
  (void)needed;  // smaller dims simply truncate the feature list
}

namespace {

std::string lower_copy(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

Vector StructFeatureProvider::embed_serialized(const std::string& serialized_text) const {
  AgentWorkflow w = parse_serialized(serialized_text);
  auto key = oracle_key_nodes(w);
  std::vector<double> feats = {
      static_cast<double>(w.nodes.size()),
      static_cast<double>(w.edges.size()),
      static_cast<double>(key.sources.size()),
      static_cast<double>(key.sinks.size()),
      static_cast<double>(longest_path_length(w)),
      oracle_average_degree(w),
  };
  for (const auto& kw : struct_feature_keywords()) {
    int hits = 0;
    for (const auto& n : w.nodes)
      if (lower_copy(n.prompt).find(kw) != std::string::npos) hits++;
    feats.push_back(static_cast<double>(hits));
  }
  Vector v = Vector::Zero(dim_);
  for (int i = 0; i < dim_ && i < static_cast<int>(feats.size()); ++i) v[i] = feats[i];
  return v;
}

// ---------------------------------------------------------------------------
// Remote provider

RemoteEmbeddingProvider::RemoteEmbeddingProvider(HttpClientConfig config, int base_dim)
    : config_(std::move(config)), dim_(base_dim) {
  if (config_.base_url.empty()) throw ConfigError("remote provider requires an endpoint URL");
}

std::string RemoteEmbeddingProvider::name() const { return "remote:" + config_.base_url; }

namespace {

nlohmann::json post_json(const HttpClientConfig& cfg, const std::string& path,
                         const nlohmann::json& body) {
  httplib::Client client(cfg.base_url);
  client.set_connection_timeout(cfg.timeout_seconds);
  client.set_read_timeout(cfg.timeout_seconds);
  std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
    auto res = client.Post(path, payload, "application/json");
    if (res && res->status == 200) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        last_error = std::string("bad JSON in response: ") + e.what();
        continue;
      }
    }
    last_error = res ? "HTTP " + std::to_string(res->status)
                     : "transport error " + httplib::to_string(res.error());
  }
  throw ProviderError("POST " + cfg.base_url + path + " failed after " +
                      std::to_string(cfg.retries + 1) + " attempts: " + last_error);
}

}  // namespace

Vector RemoteEmbeddingProvider::embed(const std::string& text) const {
  auto j = post_json(config_, "/embed", {{"text", text}});
  if (!j.contains("vector") || !j["vector"].is_array())
    throw ProviderError("embedding response lacks a 'vector' array");
  auto arr = j["vector"];
  if (static_cast<int>(arr.size()) != dim_)
    throw ProviderError("embedding has dim " + std::to_string(arr.size()) + ", expected " +
                        std::to_string(dim_));
  Vector v(dim_);
  for (int i = 0; i < dim_; ++i) v[i] = arr[i].get<double>();
  if (!v.allFinite()) throw ProviderError("embedding contains non-finite entries");
  return v;
}

Vector RemoteEmbeddingProvider::embed_serialized(const std::string& serialized_text) const {
  return embed(serialized_text);
}

std::string RemoteEmbeddingProvider::generate(const std::string& prompt) const {
  auto j = post_json(config_, "/generate", {{"prompt", prompt}});
  if (!j.contains("text")) throw ProviderError("generation response lacks 'text'");
  return j["text"].get<std::string>();
}

// ---------------------------------------------------------------------------
// Cache

std::string embedding_cache_key(const std::string& provider_name, const std::string& text) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  std::string safe_name;
  for (char c : provider_name)
    safe_name += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return safe_name + "-" + buf;
}

CachingTextProvider::CachingTextProvider(std::shared_ptr<TextEmbeddingProvider> inner,
                                         std::optional<std::filesystem::path> dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  if (dir_) std::filesystem::create_directories(*dir_);
}

Vector CachingTextProvider::embed(const std::string& text) const {
  const std::string key = embedding_cache_key(inner_->name(), text);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  if (dir_) {
    auto file = *dir_ / (key + ".json");
    std::ifstream in(file);
    if (in) {
      try {
        auto j = nlohmann::json::parse(in);
        auto arr = j.at("vector");
        Vector v(static_cast<Eigen::Index>(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
        std::lock_guard<std::mutex> lock(mu_);
        memo_[key] = v;
        return v;
      } catch (const nlohmann::json::exception&) {
        // corrupt cache entry; fall through and recompute
      }
    }
  }
  Vector v = inner_->embed(text);
  if (dir_) {
    nlohmann::ordered_json j;
    j["provider"] = inner_->name();
    j["key"] = key;
    j["vector"] = std::vector<double>(v.data(), v.data() + v.size());
    std::ofstream out(*dir_ / (key + ".json"));
    out << j.dump() << '\n';
  }
  std::lock_guard<std::mutex> lock(mu_);
  memo_[key] = v;
  return v;
}

}  // namespace glow
