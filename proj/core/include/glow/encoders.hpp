#pragma once

#include <map>
#include <string>
#include <vector>

#include "glow/nn/tape.hpp"
#include "glow/providers.hpp"
#include "glow/workflow.hpp"

namespace glow {

// Two-layer perceptron with one tanh nonlinearity. Used for the task and
// semantic projectors, the reconstruction head and the prediction head.
struct Mlp {
  nn::Parameter W1, b1, W2, b2;

  Mlp() = default;
  Mlp(const std::string& prefix, int in_dim, int hidden_dim, int out_dim, std::mt19937_64& rng);

  nn::Var apply(nn::Tape& t, nn::Var x);
  nn::Matrix eval(const nn::Matrix& x);  // forward only
  void collect(std::vector<nn::Parameter*>& out);
  int in_dim() const { return static_cast<int>(W1.value.rows()); }
  int out_dim() const { return static_cast<int>(W2.value.cols()); }
};

struct GnnConfig {
  int layers = 2;
  bool add_reverse_edges = false;
  double attention_slope = 0.2;  // LeakyReLU slope on attention scores
};

// Node embeddings at one level, rows aligned with ascending node_id order.
struct NodeEmbeddings {
  std::vector<int> node_ids;
  nn::Matrix values;  // |node_ids| x dim
};

// Attention-based message passing over the directed edges plus one self-loop
// per node. Layer 1 maps base_dim -> hidden_dim, further layers keep
// hidden_dim; ELU between layers, final layer linear.
class GnnEncoder {
 public:
  GnnEncoder() = default;
  GnnEncoder(const std::string& prefix, int in_dim, int hidden_dim, GnnConfig config,
             std::mt19937_64& rng);

  // h0 rows follow `node_ids` (ascending); edges use workflow node ids.
  nn::Var forward(nn::Tape& t, nn::Var h0, const std::vector<int>& node_ids,
                  const std::vector<Edge>& edges);

  void collect(std::vector<nn::Parameter*>& out);
  const GnnConfig& config() const { return config_; }
  int hidden_dim() const { return hidden_dim_; }
  int in_dim() const { return in_dim_; }

 private:
  struct Layer {
    nn::Parameter W;         // in x out
    nn::Parameter attn_src;  // out x 1
    nn::Parameter attn_dst;  // out x 1
    nn::Parameter bias;      // 1 x out
  };
  GnnConfig config_;
  int in_dim_ = 0, hidden_dim_ = 0;
  std::vector<Layer> layers_;
};

struct EdgeDecoderParams {
  nn::Parameter W;  // d x d
  nn::Parameter b;  // 1 x 1

  EdgeDecoderParams() = default;
  EdgeDecoderParams(const std::string& prefix, int dim, std::mt19937_64& rng);
  void collect(std::vector<nn::Parameter*>& out);
};

// sigmoid(h_i^T W h_j + b) for two d-vectors.
double edge_probability(const Vector& h_i, const Vector& h_j, const EdgeDecoderParams& params);

// ---------------------------------------------------------------------------
// Plain (forward-only) entry points used by tests and the prediction path.

Vector encode_task(const TextEmbeddingProvider& provider, const TaskInstruction& task,
                   Mlp& task_projector);

NodeEmbeddings init_node_embeddings(const TextEmbeddingProvider& provider, const AgentWorkflow& w);

NodeEmbeddings gnn_forward(const NodeEmbeddings& h0, const std::vector<Edge>& edges,
                           GnnEncoder& gnn);

Vector pool_mean(const NodeEmbeddings& h);

Vector encode_semantic(const SemanticEmbeddingProvider& provider, const AgentWorkflow& w,
                       Mlp& semantic_projector);

struct EmbeddingBundle {
  Vector r_task;
  Vector r_gnn;
  Vector r_llm;
};

struct PretrainLossValues {
  double node_loss = 0.0;
  double edge_loss = 0.0;
  double total = 0.0;  // node_loss + edge_loss
};

// Node reconstruction MSE (mean over nodes of the squared error between
// recon(h_L) and h_0) plus edge-reconstruction BCE over all |V|^2 ordered
// pairs, self-pairs included with target 0.
PretrainLossValues pretrain_losses(const AgentWorkflow& w, const NodeEmbeddings& h0,
                                   const NodeEmbeddings& hL, Mlp& recon_head,
                                   EdgeDecoderParams& edge_params);

// Tape-level versions for training; the returned Var is the scalar loss.
struct PretrainGraphVars {
  nn::Var node_loss;
  nn::Var edge_loss;
  nn::Var total;
};

PretrainGraphVars pretrain_loss_vars(nn::Tape& t, const AgentWorkflow& w, nn::Var h0, nn::Var hL,
                                     Mlp& recon_head, EdgeDecoderParams& edge_params);

}  // namespace glow
