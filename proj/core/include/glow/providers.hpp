#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "glow/workflow.hpp"

namespace glow {

using Vector = Eigen::VectorXd;

// A frozen text embedding source. Implementations must be pure: identical
// text yields a bit-identical vector of length base_dim with finite entries.
class TextEmbeddingProvider {
 public:
  virtual ~TextEmbeddingProvider() = default;
  virtual std::string name() const = 0;
  virtual int base_dim() const = 0;
  virtual Vector embed(const std::string& text) const = 0;
};

// Semantic providers consume the serialized workflow text. Same purity
// contract; kept as a separate type so configs can wire the two branches
// independently.
class SemanticEmbeddingProvider {
 public:
  virtual ~SemanticEmbeddingProvider() = default;
  virtual std::string name() const = 0;
  virtual int base_dim() const = 0;
  virtual Vector embed_serialized(const std::string& serialized_text) const = 0;
};

// Feature-hashed bag of words, L2-normalized. Deterministic local stand-in
// for a pretrained sentence embedding model.
class HashedTextProvider final : public TextEmbeddingProvider {
 public:
  explicit HashedTextProvider(int base_dim = 64);
  std::string name() const override { return name_; }
  int base_dim() const override { return dim_; }
  Vector embed(const std::string& text) const override;

 private:
  int dim_;
  std::string name_;
};

// Keyword list for the structural feature provider; ships as a constant so
// generated corpora stay reproducible.
const std::vector<std::string>& struct_feature_keywords();

// Desk-scale stand-in for the graph-oriented language model: parses the
// serialized workflow back into a graph and emits
//   [N, |E|, #sources, #sinks, longest path, average degree, keyword hits...]
// zero-padded or truncated to base_dim.
class StructFeatureProvider final : public SemanticEmbeddingProvider {
 public:
  explicit StructFeatureProvider(int base_dim = 32);
  std::string name() const override { return "struct-feature"; }
  int base_dim() const override { return dim_; }
  Vector embed_serialized(const std::string& serialized_text) const override;

 private:
  int dim_;
};

struct HttpClientConfig {
  std::string base_url;       // e.g. http://127.0.0.1:8090
  int timeout_seconds = 30;
  int retries = 2;            // additional attempts after the first
};

// Client for the external embedding/generation service:
//   POST /embed    {"text": str}   -> {"vector": [float x base_dim]}
//   POST /generate {"prompt": str} -> {"text": str}
class RemoteEmbeddingProvider final : public TextEmbeddingProvider,
                                      public SemanticEmbeddingProvider {
 public:
  RemoteEmbeddingProvider(HttpClientConfig config, int base_dim);
  std::string name() const override;
  int base_dim() const override { return dim_; }
  Vector embed(const std::string& text) const override;
  Vector embed_serialized(const std::string& serialized_text) const override;
  std::string generate(const std::string& prompt) const;

 private:
  HttpClientConfig config_;
  int dim_;
};

// Memoizing wrapper. Entries are keyed by (provider name, fnv1a64 of text);
// when a directory is given they are also persisted there, one JSON file per
// key, so repeated runs beside a dataset reuse embeddings.
class CachingTextProvider final : public TextEmbeddingProvider {
 public:
  CachingTextProvider(std::shared_ptr<TextEmbeddingProvider> inner,
                      std::optional<std::filesystem::path> dir = std::nullopt);
  std::string name() const override { return inner_->name(); }
  int base_dim() const override { return inner_->base_dim(); }
  Vector embed(const std::string& text) const override;

 private:
  std::shared_ptr<TextEmbeddingProvider> inner_;
  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, Vector> memo_;
};

std::string embedding_cache_key(const std::string& provider_name, const std::string& text);

}  // namespace glow
