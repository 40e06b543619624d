#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "glow/fusion.hpp"

namespace glow {

struct ModelConfig {
  int d = 256;
  GnnConfig gnn;
  FusionConfig fusion;
  // Ablation switches: a disabled branch contributes a zero token, keeping
  // the 4-token fusion contract intact while carrying no information.
  bool use_gnn_branch = true;
  bool use_llm_branch = true;
};

// The assembled surrogate predictor: task projector, structural encoder,
// semantic projector, fusion and prediction head, wired to frozen embedding
// providers. Provider outputs are memoized by content, so repeated forward
// passes over the same workflows only hit the providers once.
class Model {
 public:
  Model(ModelConfig config, std::shared_ptr<TextEmbeddingProvider> text_provider,
        std::shared_ptr<SemanticEmbeddingProvider> semantic_provider, std::uint64_t init_seed);

  // --- tape-level forward for training ---
  struct SampleVars {
    nn::Var logit;   // 1x1
    nn::Var z_pred;  // 1xd, fused prediction-token state
    nn::Var r_gnn;   // 1xd, post-pooling
    nn::Var r_llm;   // 1xd, post-projection
  };
  // Shares branch subgraphs between samples of one tape.
  struct BatchContext {
    explicit BatchContext(nn::Tape& t) : tape(&t) {}
    nn::Tape* tape;
    std::map<std::uint64_t, std::pair<nn::Var, nn::Var>> workflow_reps;  // content -> (gnn, llm)
    std::map<std::uint64_t, nn::Var> task_reps;
  };

  SampleVars forward_vars(BatchContext& ctx, const AgentWorkflow& w, const TaskInstruction& task);
  std::pair<nn::Var, nn::Var> workflow_rep_vars(BatchContext& ctx, const AgentWorkflow& w);

  // --- evaluation-mode forward (deterministic, read-only) ---
  PredictionOutput predict(const AgentWorkflow& w, const TaskInstruction& task);
  EmbeddingBundle encode(const AgentWorkflow& w, const TaskInstruction& task);

  std::vector<nn::Parameter*> parameters();

  const ModelConfig& config() const { return config_; }
  TextEmbeddingProvider& text_provider() { return *text_provider_; }
  SemanticEmbeddingProvider& semantic_provider() { return *semantic_provider_; }
  std::shared_ptr<TextEmbeddingProvider> text_provider_ptr() { return text_provider_; }
  std::shared_ptr<SemanticEmbeddingProvider> semantic_provider_ptr() { return semantic_provider_; }

  Mlp& task_projector() { return proj_task_; }
  Mlp& semantic_projector() { return proj_sem_; }
  GnnEncoder& gnn() { return gnn_; }
  FusionEncoder& fusion() { return fusion_; }
  Mlp& head() { return head_; }

  // frozen provider outputs, memoized by content
  const Vector& task_base(const TaskInstruction& task);
  const nn::Matrix& node_base(const AgentWorkflow& w);  // rows in ascending node id order
  const Vector& semantic_base(const AgentWorkflow& w);

 private:
  ModelConfig config_;
  std::shared_ptr<TextEmbeddingProvider> text_provider_;
  std::shared_ptr<SemanticEmbeddingProvider> semantic_provider_;
  Mlp proj_task_, proj_sem_, head_;
  GnnEncoder gnn_;
  FusionEncoder fusion_;

  std::map<std::uint64_t, Vector> task_base_cache_;
  std::map<std::uint64_t, nn::Matrix> node_base_cache_;
  std::map<std::uint64_t, Vector> semantic_base_cache_;
};

// Self-supervised pretraining heads for the structural encoder.
struct PretrainHeads {
  Mlp recon;               // d -> d -> base_dim
  EdgeDecoderParams edge;  // bilinear decoder

  PretrainHeads() = default;
  PretrainHeads(int d, int base_dim, std::uint64_t init_seed);
  void collect(std::vector<nn::Parameter*>& out);
};

// Checkpoint directory layout: config.json (architecture + provider shapes)
// and params.bin (all trainable tensors). A reload evaluates bit-identically.
void save_model(Model& model, const std::filesystem::path& dir);
Model load_model(const std::filesystem::path& dir,
                 std::shared_ptr<TextEmbeddingProvider> text_provider,
                 std::shared_ptr<SemanticEmbeddingProvider> semantic_provider);

// Structural-encoder checkpoint emitted by pretraining: GNN weights plus the
// reconstruction and edge-decoder heads.
void save_pretrained_encoder(Model& model, PretrainHeads& heads, const std::filesystem::path& dir);
void load_pretrained_encoder_into(Model& model, const std::filesystem::path& dir);

}  // namespace glow
