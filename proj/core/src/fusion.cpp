#include "glow/fusion.hpp"

#include <cmath>

#include "glow/error.hpp"

namespace glow {

using nn::Tape;
using nn::Var;

FusionEncoder::FusionEncoder(const std::string& prefix, int dim, FusionConfig config,
                             std::mt19937_64& rng)
    : config_(config),
      dim_(dim),
      prediction_token_(prefix + ".prediction_token", 1, dim),
      type_embeddings_(prefix + ".type_embeddings", 4, dim) {
  if (config.heads < 1 || dim % config.heads != 0)
    throw ConfigError("fusion: d must be divisible by the head count");
  if (config.layers < 0) throw ConfigError("fusion.layers must be >= 0");
  xavier_uniform(prediction_token_, rng);
  xavier_uniform(type_embeddings_, rng);
  const int inner = 4 * dim;
  for (int l = 0; l < config.layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    Layer layer{
        nn::Parameter(p + ".Wq", dim, dim), nn::Parameter(p + ".bq", 1, dim),
        nn::Parameter(p + ".Wk", dim, dim), nn::Parameter(p + ".bk", 1, dim),
        nn::Parameter(p + ".Wv", dim, dim), nn::Parameter(p + ".bv", 1, dim),
        nn::Parameter(p + ".Wo", dim, dim), nn::Parameter(p + ".bo", 1, dim),
        nn::Parameter(p + ".ln1_gain", 1, dim), nn::Parameter(p + ".ln1_bias", 1, dim),
        nn::Parameter(p + ".ff_W1", dim, inner), nn::Parameter(p + ".ff_b1", 1, inner),
        nn::Parameter(p + ".ff_W2", inner, dim), nn::Parameter(p + ".ff_b2", 1, dim),
        nn::Parameter(p + ".ln2_gain", 1, dim), nn::Parameter(p + ".ln2_bias", 1, dim),
    };
    for (auto* w : {&layer.Wq, &layer.Wk, &layer.Wv, &layer.Wo, &layer.ff_W1, &layer.ff_W2})
      xavier_uniform(*w, rng);
    layer.ln1_gain.value.setOnes();
    layer.ln2_gain.value.setOnes();
    layers_.push_back(std::move(layer));
  }
}

Var FusionEncoder::fuse(Tape& t, Var r_llm, Var r_gnn, Var r_task) {
  for (Var v : {r_llm, r_gnn, r_task})
    if (t.value(v).rows() != 1 || t.value(v).cols() != dim_)
      throw ConfigError("fuse: inputs must be 1x" + std::to_string(dim_));

  Var z = t.concat_rows({t.param(prediction_token_), r_llm, r_gnn, r_task});
  z = t.add(z, t.param(type_embeddings_));

  const int head_dim = dim_ / config_.heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (auto& layer : layers_) {
    Var q = t.add_rowvec(t.matmul(z, t.param(layer.Wq)), t.param(layer.bq));
    Var k = t.add_rowvec(t.matmul(z, t.param(layer.Wk)), t.param(layer.bk));
    Var v = t.add_rowvec(t.matmul(z, t.param(layer.Wv)), t.param(layer.bv));
    std::vector<Var> head_outs;
    for (int h = 0; h < config_.heads; ++h) {
      Var qh = t.cols(q, h * head_dim, head_dim);
      Var kh = t.cols(k, h * head_dim, head_dim);
      Var vh = t.cols(v, h * head_dim, head_dim);
      Var attn = t.softmax_rows(t.scale(t.matmul(qh, t.transpose(kh)), att_scale));
      head_outs.push_back(t.matmul(attn, vh));
    }
    Var mhsa = t.add_rowvec(t.matmul(t.concat_cols(head_outs), t.param(layer.Wo)),
                            t.param(layer.bo));
    z = t.layer_norm(t.add(mhsa, z), t.param(layer.ln1_gain), t.param(layer.ln1_bias),
                     config_.ln_eps);
    Var ff = t.add_rowvec(
        t.matmul(t.gelu(t.add_rowvec(t.matmul(z, t.param(layer.ff_W1)), t.param(layer.ff_b1))),
                 t.param(layer.ff_W2)),
        t.param(layer.ff_b2));
    z = t.layer_norm(t.add(ff, z), t.param(layer.ln2_gain), t.param(layer.ln2_bias),
                     config_.ln_eps);
  }
  return t.row(z, 0);
}

void FusionEncoder::collect(std::vector<nn::Parameter*>& out) {
  out.push_back(&prediction_token_);
  out.push_back(&type_embeddings_);
  for (auto& l : layers_) {
    for (auto* p : {&l.Wq, &l.bq, &l.Wk, &l.bk, &l.Wv, &l.bv, &l.Wo, &l.bo, &l.ln1_gain,
                    &l.ln1_bias, &l.ff_W1, &l.ff_b1, &l.ff_W2, &l.ff_b2, &l.ln2_gain, &l.ln2_bias})
      out.push_back(p);
  }
}

PredictionOutput predict_score(const Vector& z_pred, Mlp& head) {
  if (z_pred.size() != head.in_dim())
    throw ConfigError("predict_score: z_pred dim does not match head");
  double logit = head.eval(z_pred.transpose())(0, 0);
  PredictionOutput out;
  out.logit = logit;
  out.score = logit >= 0.0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
  out.z_pred = z_pred;
  return out;
}

}  // namespace glow
