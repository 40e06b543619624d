#include "glow/encoders.hpp"

#include <algorithm>

#include "glow/error.hpp"
#include "glow/textualize.hpp"

namespace glow {

using nn::Tape;
using nn::Var;

Mlp::Mlp(const std::string& prefix, int in_dim, int hidden_dim, int out_dim, std::mt19937_64& rng)
    : W1(prefix + ".W1", in_dim, hidden_dim),
      b1(prefix + ".b1", 1, hidden_dim),
      W2(prefix + ".W2", hidden_dim, out_dim),
      b2(prefix + ".b2", 1, out_dim) {
  xavier_uniform(W1, rng);
  xavier_uniform(W2, rng);
}

Var Mlp::apply(Tape& t, Var x) {
  Var h = t.tanh_(t.add_rowvec(t.matmul(x, t.param(W1)), t.param(b1)));
  return t.add_rowvec(t.matmul(h, t.param(W2)), t.param(b2));
}

nn::Matrix Mlp::eval(const nn::Matrix& x) {
  Tape t;
  return t.value(apply(t, t.input(x)));
}

void Mlp::collect(std::vector<nn::Parameter*>& out) {
  out.push_back(&W1);
  out.push_back(&b1);
  out.push_back(&W2);
  out.push_back(&b2);
}

GnnEncoder::GnnEncoder(const std::string& prefix, int in_dim, int hidden_dim, GnnConfig config,
                       std::mt19937_64& rng)
    : config_(config), in_dim_(in_dim), hidden_dim_(hidden_dim) {
  if (config.layers < 1) throw ConfigError("gnn.layers must be >= 1");
  for (int l = 0; l < config.layers; ++l) {
    const int in = l == 0 ? in_dim : hidden_dim;
    Layer layer{
        nn::Parameter(prefix + ".layer" + std::to_string(l) + ".W", in, hidden_dim),
        nn::Parameter(prefix + ".layer" + std::to_string(l) + ".attn_src", hidden_dim, 1),
        nn::Parameter(prefix + ".layer" + std::to_string(l) + ".attn_dst", hidden_dim, 1),
        nn::Parameter(prefix + ".layer" + std::to_string(l) + ".bias", 1, hidden_dim),
    };
    xavier_uniform(layer.W, rng);
    xavier_uniform(layer.attn_src, rng);
    xavier_uniform(layer.attn_dst, rng);
    layers_.push_back(std::move(layer));
  }
}

Var GnnEncoder::forward(Tape& t, Var h0, const std::vector<int>& node_ids,
                        const std::vector<Edge>& edges) {
  const int n = static_cast<int>(node_ids.size());
  if (t.value(h0).rows() != n) throw ConfigError("gnn_forward: h0 rows must match node count");
  std::map<int, int> index;
  for (int i = 0; i < n; ++i) index[node_ids[i]] = i;

  // message edges: declared edges (optionally mirrored) plus one self-loop
  // per node, sorted by (dst, src) so attention segments are contiguous
  std::vector<std::pair<int, int>> msg;  // (src index, dst index)
  for (const auto& e : edges) {
    auto s = index.find(e.source), d = index.find(e.target);
    if (s == index.end() || d == index.end())
      throw ConfigError("gnn_forward: edge endpoint not in node set");
    msg.push_back({s->second, d->second});
    if (config_.add_reverse_edges) msg.push_back({d->second, s->second});
  }
  for (int i = 0; i < n; ++i) msg.push_back({i, i});
  std::sort(msg.begin(), msg.end(),
            [](const auto& a, const auto& b) { return std::tie(a.second, a.first) < std::tie(b.second, b.first); });
  std::vector<int> src_idx, dst_idx;
  for (auto [s, d] : msg) {
    src_idx.push_back(s);
    dst_idx.push_back(d);
  }
  std::vector<std::pair<int, int>> segments;
  for (int e = 0; e < static_cast<int>(msg.size());) {
    int start = e, dst = msg[e].second;
    while (e < static_cast<int>(msg.size()) && msg[e].second == dst) e++;
    segments.push_back({start, e - start});
  }

  Var h = h0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    Var hw = t.matmul(h, t.param(layer.W));
    Var s_src = t.matmul(hw, t.param(layer.attn_src));  // n x 1
    Var s_dst = t.matmul(hw, t.param(layer.attn_dst));  // n x 1
    Var scores = t.leaky_relu(t.add(t.rows(s_src, src_idx), t.rows(s_dst, dst_idx)),
                              config_.attention_slope);
    Var alpha = t.segment_softmax(scores, segments);
    Var messages = t.colwise_scale(t.rows(hw, src_idx), alpha);
    Var agg = t.scatter_add_rows(messages, dst_idx, n);
    h = t.add_rowvec(agg, t.param(layer.bias));
    if (l + 1 < layers_.size()) h = t.elu(h);
  }
  return h;
}

void GnnEncoder::collect(std::vector<nn::Parameter*>& out) {
  for (auto& l : layers_) {
    out.push_back(&l.W);
    out.push_back(&l.attn_src);
    out.push_back(&l.attn_dst);
    out.push_back(&l.bias);
  }
}

EdgeDecoderParams::EdgeDecoderParams(const std::string& prefix, int dim, std::mt19937_64& rng)
    : W(prefix + ".W", dim, dim), b(prefix + ".b", 1, 1) {
  xavier_uniform(W, rng);
}

void EdgeDecoderParams::collect(std::vector<nn::Parameter*>& out) {
  out.push_back(&W);
  out.push_back(&b);
}

double edge_probability(const Vector& h_i, const Vector& h_j, const EdgeDecoderParams& params) {
  if (h_i.size() != params.W.value.rows() || h_j.size() != params.W.value.cols())
    throw ConfigError("edge_probability: vector dims do not match decoder");
  double z = h_i.transpose() * params.W.value * h_j + params.b.value(0, 0);
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// ---------------------------------------------------------------------------

Vector encode_task(const TextEmbeddingProvider& provider, const TaskInstruction& task,
                   Mlp& task_projector) {
  Vector base;
  try {
    base = provider.embed(task.text);
  } catch (const Error& e) {
    throw ProviderError("task '" + task.task_id + "': " + e.what());
  }
  if (base.size() != task_projector.in_dim())
    throw ConfigError("task projector expects dim " + std::to_string(task_projector.in_dim()));
  return task_projector.eval(base.transpose()).row(0);
}

NodeEmbeddings init_node_embeddings(const TextEmbeddingProvider& provider, const AgentWorkflow& w) {
  NodeEmbeddings out;
  for (const auto& n : w.nodes) out.node_ids.push_back(n.id);
  std::sort(out.node_ids.begin(), out.node_ids.end());
  out.values.resize(static_cast<Eigen::Index>(out.node_ids.size()), provider.base_dim());
  for (std::size_t i = 0; i < out.node_ids.size(); ++i) {
    try {
      out.values.row(static_cast<Eigen::Index>(i)) =
          provider.embed(w.node(out.node_ids[i]).prompt).transpose();
    } catch (const Error& e) {
      throw ProviderError("workflow '" + w.workflow_id + "' node " +
                          std::to_string(out.node_ids[i]) + ": " + e.what());
    }
  }
  return out;
}

NodeEmbeddings gnn_forward(const NodeEmbeddings& h0, const std::vector<Edge>& edges,
                           GnnEncoder& gnn) {
  Tape t;
  Var out = gnn.forward(t, t.input(h0.values), h0.node_ids, edges);
  return {h0.node_ids, t.value(out)};
}

Vector pool_mean(const NodeEmbeddings& h) {
  if (h.node_ids.empty()) throw Error("pool_mean: empty node set");
  return h.values.colwise().mean();
}

Vector encode_semantic(const SemanticEmbeddingProvider& provider, const AgentWorkflow& w,
                       Mlp& semantic_projector) {
  Vector base;
  try {
    base = provider.embed_serialized(serialize_workflow(w).text);
  } catch (const Error& e) {
    throw ProviderError("workflow '" + w.workflow_id + "': " + e.what());
  }
  if (base.size() != semantic_projector.in_dim())
    throw ConfigError("semantic projector expects dim " + std::to_string(semantic_projector.in_dim()));
  return semantic_projector.eval(base.transpose()).row(0);
}

PretrainGraphVars pretrain_loss_vars(Tape& t, const AgentWorkflow& w, Var h0, Var hL,
                                     Mlp& recon_head, EdgeDecoderParams& edge_params) {
  const Eigen::Index n = t.value(h0).rows();
  if (t.value(hL).rows() != n) throw ConfigError("pretrain losses: h0/hL node count mismatch");

  // node reconstruction: mean over nodes of the squared L2 error
  Var diff = t.sub(recon_head.apply(t, hL), h0);
  Var node_loss = t.scale(t.sum_all(t.square(diff)), 1.0 / static_cast<double>(n));

  // edge reconstruction over all |V|^2 ordered pairs, e_ii = 0
  std::vector<int> ids;
  for (const auto& node : w.nodes) ids.push_back(node.id);
  std::sort(ids.begin(), ids.end());
  std::map<int, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<int>(i);
  nn::Matrix targets = nn::Matrix::Zero(n, n);
  for (const auto& e : w.edges) targets(index.at(e.source), index.at(e.target)) = 1.0;
  Var logits = t.add_scalar(t.matmul(t.matmul(hL, t.param(edge_params.W)), t.transpose(hL)),
                            t.param(edge_params.b));
  Var edge_loss = t.bce_with_logits_mean(logits, std::move(targets));

  return {node_loss, edge_loss, t.add(node_loss, edge_loss)};
}

PretrainLossValues pretrain_losses(const AgentWorkflow& w, const NodeEmbeddings& h0,
                                   const NodeEmbeddings& hL, Mlp& recon_head,
                                   EdgeDecoderParams& edge_params) {
  Tape t;
  auto vars = pretrain_loss_vars(t, w, t.input(h0.values), t.input(hL.values), recon_head,
                                 edge_params);
  return {t.value(vars.node_loss)(0, 0), t.value(vars.edge_loss)(0, 0),
          t.value(vars.total)(0, 0)};
}

}  // namespace glow
