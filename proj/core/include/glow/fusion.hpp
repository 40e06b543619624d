#pragma once

#include <string>
#include <vector>

#include "glow/encoders.hpp"
#include "glow/nn/tape.hpp"

namespace glow {

struct FusionConfig {
  int layers = 2;  // L_T
  int heads = 4;
  double ln_eps = 1e-5;
};

struct PredictionOutput {
  double score = 0.5;   // sigmoid(logit), strictly inside (0,1)
  double logit = 0.0;
  Vector z_pred;        // prediction-token state entering the head
};

// Transformer encoder over the fixed 4-token sequence
// [prediction; llm; gnn; task] with additive type embeddings. Post-norm:
// LN(MHSA(Z)+Z) then LN(FFN(.)+.), feed-forward inner width 4d. The
// prediction-token row of the last layer is the fused representation.
class FusionEncoder {
 public:
  FusionEncoder() = default;
  FusionEncoder(const std::string& prefix, int dim, FusionConfig config, std::mt19937_64& rng);

  // each input is a 1 x d row; returns the 1 x d fused prediction state
  nn::Var fuse(nn::Tape& t, nn::Var r_llm, nn::Var r_gnn, nn::Var r_task);

  void collect(std::vector<nn::Parameter*>& out);
  int dim() const { return dim_; }
  const FusionConfig& config() const { return config_; }

 private:
  struct Layer {
    nn::Parameter Wq, bq, Wk, bk, Wv, bv, Wo, bo;
    nn::Parameter ln1_gain, ln1_bias;
    nn::Parameter ff_W1, ff_b1, ff_W2, ff_b2;
    nn::Parameter ln2_gain, ln2_bias;
  };

  FusionConfig config_;
  int dim_ = 0;
  nn::Parameter prediction_token_;  // 1 x d
  nn::Parameter type_embeddings_;   // 4 x d, rows: Pred, LLM, GNN, Task
  std::vector<Layer> layers_;
};

// sigmoid(head(z_pred)); the head is a 2-layer perceptron d -> d -> 1.
PredictionOutput predict_score(const Vector& z_pred, Mlp& head);

}  // namespace glow
