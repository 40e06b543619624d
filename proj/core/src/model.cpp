#include "glow/model.hpp"

#include <fstream>

#include <json.hpp>

#include "glow/error.hpp"
#include "glow/seed.hpp"
#include "glow/textualize.hpp"

namespace glow {

using nn::Tape;
using nn::Var;

Model::Model(ModelConfig config, std::shared_ptr<TextEmbeddingProvider> text_provider,
             std::shared_ptr<SemanticEmbeddingProvider> semantic_provider, std::uint64_t init_seed)
    : config_(config),
      text_provider_(std::move(text_provider)),
      semantic_provider_(std::move(semantic_provider)) {
  if (config_.d < 1) throw ConfigError("model: d must be >= 1");
  std::mt19937_64 rng(derive_seed(init_seed, "model-init"));
  const int bt = text_provider_->base_dim();
  const int bs = semantic_provider_->base_dim();
  proj_task_ = Mlp("proj_task", bt, config_.d, config_.d, rng);
  proj_sem_ = Mlp("proj_sem", bs, config_.d, config_.d, rng);
  gnn_ = GnnEncoder("gnn", bt, config_.d, config_.gnn, rng);
  fusion_ = FusionEncoder("fusion", config_.d, config_.fusion, rng);
  head_ = Mlp("head", config_.d, config_.d, 1, rng);
}

std::vector<nn::Parameter*> Model::parameters() {
  std::vector<nn::Parameter*> out;
  proj_task_.collect(out);
  proj_sem_.collect(out);
  gnn_.collect(out);
  fusion_.collect(out);
  head_.collect(out);
  return out;
}

const Vector& Model::task_base(const TaskInstruction& task) {
  std::uint64_t key = fnv1a64(task.text);
  auto it = task_base_cache_.find(key);
  if (it == task_base_cache_.end()) {
    Vector v;
    try {
      v = text_provider_->embed(task.text);
    } catch (const Error& e) {
      throw ProviderError("task '" + task.task_id + "': " + e.what());
    }
    it = task_base_cache_.emplace(key, std::move(v)).first;
  }
  return it->second;
}

const nn::Matrix& Model::node_base(const AgentWorkflow& w) {
  std::uint64_t key = fnv1a64(serialize_workflow(w).text);
  auto it = node_base_cache_.find(key);
  if (it == node_base_cache_.end()) {
    auto h0 = init_node_embeddings(*text_provider_, w);
    it = node_base_cache_.emplace(key, std::move(h0.values)).first;
  }
  return it->second;
}

const Vector& Model::semantic_base(const AgentWorkflow& w) {
  std::string serialized = serialize_workflow(w).text;
  std::uint64_t key = fnv1a64(serialized);
  auto it = semantic_base_cache_.find(key);
  if (it == semantic_base_cache_.end()) {
    Vector v;
    try {
      v = semantic_provider_->embed_serialized(serialized);
    } catch (const Error& e) {
      throw ProviderError("workflow '" + w.workflow_id + "': " + e.what());
    }
    it = semantic_base_cache_.emplace(key, std::move(v)).first;
  }
  return it->second;
}

std::pair<Var, Var> Model::workflow_rep_vars(BatchContext& ctx, const AgentWorkflow& w) {
  Tape& t = *ctx.tape;
  std::uint64_t key = fnv1a64(serialize_workflow(w).text);
  auto it = ctx.workflow_reps.find(key);
  if (it != ctx.workflow_reps.end()) return it->second;

  if (w.nodes.empty()) throw Error("workflow '" + w.workflow_id + "' has no nodes");

  Var r_gnn;
  if (config_.use_gnn_branch) {
    std::vector<int> ids;
    for (const auto& n : w.nodes) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    Var h0 = t.input(node_base(w));
    Var hl = gnn_.forward(t, h0, ids, w.edges);
    r_gnn = t.mean_rows(hl);
  } else {
    r_gnn = t.input(nn::Matrix::Zero(1, config_.d));
  }

  Var r_llm;
  if (config_.use_llm_branch) {
    Var base = t.input(semantic_base(w).transpose());
    r_llm = proj_sem_.apply(t, base);
  } else {
    r_llm = t.input(nn::Matrix::Zero(1, config_.d));
  }

  auto reps = std::make_pair(r_gnn, r_llm);
  ctx.workflow_reps.emplace(key, reps);
  return reps;
}

Model::SampleVars Model::forward_vars(BatchContext& ctx, const AgentWorkflow& w,
                                      const TaskInstruction& task) {
  Tape& t = *ctx.tape;
  auto [r_gnn, r_llm] = workflow_rep_vars(ctx, w);

  std::uint64_t tkey = fnv1a64(task.text);
  Var r_task;
  auto it = ctx.task_reps.find(tkey);
  if (it != ctx.task_reps.end()) {
    r_task = it->second;
  } else {
    r_task = proj_task_.apply(t, t.input(task_base(task).transpose()));
    ctx.task_reps.emplace(tkey, r_task);
  }

  Var z = fusion_.fuse(t, r_llm, r_gnn, r_task);
  Var logit = head_.apply(t, z);
  return {logit, z, r_gnn, r_llm};
}

PredictionOutput Model::predict(const AgentWorkflow& w, const TaskInstruction& task) {
  Tape t;
  BatchContext ctx(t);
  auto vars = forward_vars(ctx, w, task);
  return predict_score(t.value(vars.z_pred).row(0), head_);
}

EmbeddingBundle Model::encode(const AgentWorkflow& w, const TaskInstruction& task) {
  Tape t;
  BatchContext ctx(t);
  auto [r_gnn, r_llm] = workflow_rep_vars(ctx, w);
  Var r_task = proj_task_.apply(t, t.input(task_base(task).transpose()));
  return {t.value(r_task).row(0), t.value(r_gnn).row(0), t.value(r_llm).row(0)};
}

PretrainHeads::PretrainHeads(int d, int base_dim, std::uint64_t init_seed) {
  std::mt19937_64 rng(derive_seed(init_seed, "pretrain-heads-init"));
  recon = Mlp("recon", d, d, base_dim, rng);
  edge = EdgeDecoderParams("edge_decoder", d, rng);
}

void PretrainHeads::collect(std::vector<nn::Parameter*>& out) {
  recon.collect(out);
  edge.collect(out);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

nlohmann::ordered_json model_config_json(Model& model) {
  const auto& c = model.config();
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["d"] = c.d;
  j["gnn"] = {{"layers", c.gnn.layers},
              {"add_reverse_edges", c.gnn.add_reverse_edges},
              {"attention_slope", c.gnn.attention_slope}};
  j["fusion"] = {{"layers", c.fusion.layers}, {"heads", c.fusion.heads}};
  j["use_gnn_branch"] = c.use_gnn_branch;
  j["use_llm_branch"] = c.use_llm_branch;
  j["text_provider"] = {{"name", model.text_provider().name()},
                        {"base_dim", model.text_provider().base_dim()}};
  j["semantic_provider"] = {{"name", model.semantic_provider().name()},
                            {"base_dim", model.semantic_provider().base_dim()}};
  return j;
}

}  // namespace

void save_model(Model& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.json");
    if (!out) throw Error("cannot write " + (dir / "config.json").string());
    out << model_config_json(model).dump(2) << '\n';
  }
  std::vector<nn::Parameter*> params = model.parameters();
  std::vector<const nn::Parameter*> cparams(params.begin(), params.end());
  nn::save_parameters(cparams, dir / "params.bin");
}

Model load_model(const std::filesystem::path& dir,
                 std::shared_ptr<TextEmbeddingProvider> text_provider,
                 std::shared_ptr<SemanticEmbeddingProvider> semantic_provider) {
  std::ifstream in(dir / "config.json");
  if (!in) throw Error("cannot open " + (dir / "config.json").string());
  nlohmann::json j = nlohmann::json::parse(in);
  ModelConfig config;
  config.d = j.at("d").get<int>();
  config.gnn.layers = j.at("gnn").at("layers").get<int>();
  config.gnn.add_reverse_edges = j.at("gnn").at("add_reverse_edges").get<bool>();
  config.gnn.attention_slope = j.at("gnn").at("attention_slope").get<double>();
  config.fusion.layers = j.at("fusion").at("layers").get<int>();
  config.fusion.heads = j.at("fusion").at("heads").get<int>();
  config.use_gnn_branch = j.at("use_gnn_branch").get<bool>();
  config.use_llm_branch = j.at("use_llm_branch").get<bool>();
  for (const char* branch : {"text_provider", "semantic_provider"}) {
    int want = j.at(branch).at("base_dim").get<int>();
    int have = std::string(branch) == "text_provider" ? text_provider->base_dim()
                                                      : semantic_provider->base_dim();
    if (want != have)
      throw ConfigError(std::string(branch) + " base_dim " + std::to_string(have) +
                        " does not match checkpoint (" + std::to_string(want) + ")");
  }
  Model model(config, std::move(text_provider), std::move(semantic_provider), /*init_seed=*/0);
  nn::load_parameters(model.parameters(), dir / "params.bin");
  return model;
}

void save_pretrained_encoder(Model& model, PretrainHeads& heads, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.json");
    if (!out) throw Error("cannot write " + (dir / "config.json").string());
    auto j = model_config_json(model);
    j["checkpoint_kind"] = "pretrained-encoder";
    out << j.dump(2) << '\n';
  }
  std::vector<nn::Parameter*> params;
  model.gnn().collect(params);
  heads.collect(params);
  std::vector<const nn::Parameter*> cparams(params.begin(), params.end());
  nn::save_parameters(cparams, dir / "params.bin");
}

void load_pretrained_encoder_into(Model& model, const std::filesystem::path& dir) {
  std::vector<nn::Parameter*> params;
  model.gnn().collect(params);
  nn::load_parameters(params, dir / "params.bin");
}

}  // namespace glow
