#include "glow/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "glow/error.hpp"
#include "glow/evaluation.hpp"
#include "glow/seed.hpp"

namespace glow {

using nn::Tape;
using nn::Var;

void TrainConfig::validate() const {
  if (d < 1) throw ConfigError("config: d must be >= 1");
  if (lambda < 0.0) throw ConfigError("config: lambda must be >= 0");
  if (alpha < 0.0) throw ConfigError("config: alpha must be >= 0");
  if (patience > max_epochs) throw ConfigError("config: patience must be <= max_epochs");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("config: max_epochs must be >= 1");
  if (fusion_heads < 1 || d % fusion_heads != 0)
    throw ConfigError("config: d must be divisible by fusion_heads");
}

double bce_prediction_loss(const std::vector<double>& scores, const std::vector<int>& labels,
                           double positive_class_weight) {
  if (scores.empty() || scores.size() != labels.size())
    throw Error("bce_prediction_loss: need equally many scores and labels, at least one");
  double acc = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double y = static_cast<double>(labels[i]);
    double p = scores[i];
    if (!(p > 0.0 && p < 1.0))
      throw Error("bce_prediction_loss: scores must lie strictly inside (0,1)");
    acc += positive_class_weight * y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return -acc / static_cast<double>(scores.size());
}

std::vector<Triplet> build_triplets(const LabeledDataset& d, const std::string& task_id,
                                    std::uint64_t seed) {
  std::vector<std::string> successes, failures;
  for (const auto& s : d.samples) {
    if (s.task_id != task_id) continue;
    (s.label == 1 ? successes : failures).push_back(s.workflow_id);
  }
  std::sort(successes.begin(), successes.end());
  std::sort(failures.begin(), failures.end());
  if (successes.size() < 2 || failures.empty()) return {};

  std::mt19937_64 rng(derive_seed(seed, "triplets:" + task_id));
  std::vector<Triplet> out;
  for (const auto& anchor : successes) {
    std::uniform_int_distribution<std::size_t> pos_pick(0, successes.size() - 2);
    std::size_t p = pos_pick(rng);
    if (successes[p] == anchor) p = successes.size() - 1;  // remap the anchor slot
    std::uniform_int_distribution<std::size_t> neg_pick(0, failures.size() - 1);
    out.push_back({task_id, anchor, successes[p], failures[neg_pick(rng)]});
  }
  return out;
}

std::vector<Triplet> build_all_triplets(const LabeledDataset& d, std::uint64_t seed) {
  std::vector<Triplet> out;
  for (const auto& [task_id, task] : d.tasks) {
    auto part = build_triplets(d, task_id, seed);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

double cosine_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error("cosine_distance: dimension mismatch");
  const double eps = 1e-12;
  double denom = (a.norm() + eps) * (b.norm() + eps);
  return 1.0 - a.dot(b) / denom;
}

double triplet_contrastive_loss(const std::vector<Triplet>& triplets,
                                const std::map<std::string, Vector>& reps, double alpha) {
  if (triplets.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& t : triplets) {
    auto find = [&](const std::string& id) -> const Vector& {
      auto it = reps.find(id);
      if (it == reps.end()) throw NotFoundError("no representation for workflow '" + id + "'");
      return it->second;
    };
    double dp = cosine_distance(find(t.anchor), find(t.positive));
    double dn = cosine_distance(find(t.anchor), find(t.negative));
    acc += std::max(0.0, dp - dn + alpha);
  }
  return acc / static_cast<double>(triplets.size());
}

double total_loss(double l_pred, double l_con_gnn, double l_con_llm, double lambda) {
  return l_pred + 0.5 * lambda * (l_con_gnn + l_con_llm);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<nn::Matrix> snapshot_values(const std::vector<nn::Parameter*>& params) {
  std::vector<nn::Matrix> out;
  out.reserve(params.size());
  for (auto* p : params) out.push_back(p->value);
  return out;
}

void restore_values(const std::vector<nn::Parameter*>& params,
                    const std::vector<nn::Matrix>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

Var cos_dist_var(Tape& t, Var a, Var b) {
  Var eps = t.scalar_input(1e-12);
  Var na = t.add(t.sqrt_(t.sum_all(t.square(a))), eps);
  Var nb = t.add(t.sqrt_(t.sum_all(t.square(b))), eps);
  Var sim = t.cdiv(t.matmul(a, t.transpose(b)), t.cmul(na, nb));
  return t.sub(t.scalar_input(1.0), sim);
}

// max(0, d(a,p) - d(a,n) + alpha) on one branch
Var triplet_hinge_var(Tape& t, Var a, Var p, Var n, double alpha) {
  Var dp = cos_dist_var(t, a, p);
  Var dn = cos_dist_var(t, a, n);
  return t.relu(t.add(t.sub(dp, dn), t.scalar_input(alpha)));
}

Var mean_of(Tape& t, const std::vector<Var>& vars) {
  if (vars.empty()) return t.scalar_input(0.0);
  return t.scale(t.sum_all(t.concat_rows(vars)), 1.0 / static_cast<double>(vars.size()));
}

}  // namespace

PretrainResult pretrain_gnn(Model& model, PretrainHeads& heads,
                            const std::vector<const AgentWorkflow*>& workflows,
                            const TrainConfig& config) {
  config.validate();
  if (workflows.empty()) throw Error("pretrain_gnn: no workflows");
  for (const auto* w : workflows) {
    auto report = validate_workflow(*w);
    if (!report.ok())
      throw Error("pretrain_gnn: workflow '" + w->workflow_id +
                  "' invalid: " + report.errors.front().message);
  }

  std::vector<nn::Parameter*> params;
  model.gnn().collect(params);
  heads.collect(params);
  nn::AdamW optimizer(params, config.pretrain_learning_rate, config.weight_decay);

  auto graph_loss = [&](Tape& t, const AgentWorkflow& w) {
    std::vector<int> ids;
    for (const auto& n : w.nodes) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    Var h0 = t.input(model.node_base(w));
    Var hl = model.gnn().forward(t, h0, ids, w.edges);
    return pretrain_loss_vars(t, w, h0, hl, heads.recon, heads.edge).total;
  };

  PretrainResult result;
  {
    Tape t;
    std::vector<Var> per_graph;
    for (const auto* w : workflows) per_graph.push_back(graph_loss(t, *w));
    result.initial_loss = t.value(mean_of(t, per_graph))(0, 0);
    result.loss_curve.push_back(result.initial_loss);
  }

  auto last_good = snapshot_values(params);
  double last_loss = result.initial_loss;
  for (int step = 0; step < config.pretrain_steps; ++step) {
    Tape t;
    std::vector<Var> per_graph;
    for (const auto* w : workflows) per_graph.push_back(graph_loss(t, *w));
    Var loss = mean_of(t, per_graph);
    double value = t.value(loss)(0, 0);
    if (!std::isfinite(value)) {
      restore_values(params, last_good);
      result.aborted_non_finite = true;
      break;
    }
    last_good = snapshot_values(params);
    last_loss = value;
    optimizer.zero_grad();
    t.backward(loss);
    optimizer.step();
    result.loss_curve.push_back(value);
  }
  // loss after the final step
  if (!result.aborted_non_finite) {
    Tape t;
    std::vector<Var> per_graph;
    for (const auto* w : workflows) per_graph.push_back(graph_loss(t, *w));
    result.final_loss = t.value(mean_of(t, per_graph))(0, 0);
    if (!std::isfinite(result.final_loss)) {
      restore_values(params, last_good);
      result.aborted_non_finite = true;
      result.final_loss = last_loss;
    }
  } else {
    result.final_loss = last_loss;
  }
  return result;
}

PretrainResult pretrain_gnn(Model& model, PretrainHeads& heads, const LabeledDataset& train,
                            const TrainConfig& config) {
  std::vector<const AgentWorkflow*> workflows;
  for (const auto& [id, w] : train.workflows) workflows.push_back(&w);
  return pretrain_gnn(model, heads, workflows, config);
}

// ---------------------------------------------------------------------------

TrainingHistory train(Model& model, const LabeledDataset& train_split,
                      const LabeledDataset& val_split, const TrainConfig& config) {
  config.validate();
  if (train_split.samples.empty()) throw Error("train: empty training split");
  if (val_split.samples.empty()) throw Error("train: empty validation split");

  auto params = model.parameters();
  nn::AdamW optimizer(params, config.learning_rate, config.weight_decay);

  auto val_accuracy = [&]() {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& s : val_split.samples) {
      scores.push_back(
          model.predict(val_split.workflows.at(s.workflow_id), val_split.tasks.at(s.task_id))
              .score);
      labels.push_back(s.label);
    }
    return accuracy(scores, labels);
  };

  TrainingHistory history;
  auto best = snapshot_values(params);
  double best_acc = -1.0;
  int since_best = 0;

  std::vector<std::size_t> order(train_split.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(config.seed, "train-epoch", static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    auto triplets = build_all_triplets(
        train_split, derive_seed(config.seed, "train-triplets", static_cast<std::uint64_t>(epoch)));
    std::shuffle(triplets.begin(), triplets.end(), rng);

    const std::size_t S = order.size();
    const std::size_t T = triplets.size();
    const std::size_t batches = (S + config.batch_size - 1) / config.batch_size;

    double sum_pred = 0.0, sum_gnn = 0.0, sum_llm = 0.0, sum_total = 0.0;
    long pred_n = 0, con_n = 0;

    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(S, lo + config.batch_size);
      const std::size_t tlo = b * T / batches;
      const std::size_t thi = (b + 1) * T / batches;

      Tape t;
      Model::BatchContext ctx(t);

      std::vector<Var> logits;
      nn::Matrix targets(static_cast<Eigen::Index>(hi - lo), 1);
      for (std::size_t i = lo; i < hi; ++i) {
        const auto& s = train_split.samples[order[i]];
        auto vars = model.forward_vars(ctx, train_split.workflows.at(s.workflow_id),
                                       train_split.tasks.at(s.task_id));
        logits.push_back(vars.logit);
        targets(static_cast<Eigen::Index>(i - lo), 0) = static_cast<double>(s.label);
      }
      Var logit_col = t.concat_rows(logits);
      Var l_pred;
      if (config.positive_class_weight == 1.0) {
        l_pred = t.bce_with_logits_mean(logit_col, targets);
      } else {
        // weighted BCE: mean of w*y*softplus(-z) + (1-y)*softplus(z)
        nn::Matrix wpos = targets * config.positive_class_weight;
        nn::Matrix wneg = nn::Matrix::Ones(targets.rows(), 1) - targets;
        Var sp_pos = t.softplus(t.scale(logit_col, -1.0));
        Var sp_neg = t.softplus(logit_col);
        Var weighted = t.add(t.cmul(t.input(wpos), sp_pos), t.cmul(t.input(wneg), sp_neg));
        l_pred = t.mean_all(weighted);
      }

      std::vector<Var> hinges_gnn, hinges_llm;
      for (std::size_t i = tlo; i < thi; ++i) {
        const auto& trip = triplets[i];
        auto [a_gnn, a_llm] = model.workflow_rep_vars(ctx, train_split.workflows.at(trip.anchor));
        auto [p_gnn, p_llm] = model.workflow_rep_vars(ctx, train_split.workflows.at(trip.positive));
        auto [n_gnn, n_llm] = model.workflow_rep_vars(ctx, train_split.workflows.at(trip.negative));
        hinges_gnn.push_back(triplet_hinge_var(t, a_gnn, p_gnn, n_gnn, config.alpha));
        hinges_llm.push_back(triplet_hinge_var(t, a_llm, p_llm, n_llm, config.alpha));
      }
      Var l_con_gnn = mean_of(t, hinges_gnn);
      Var l_con_llm = mean_of(t, hinges_llm);

      Var loss = t.add(l_pred, t.scale(t.add(l_con_gnn, l_con_llm), 0.5 * config.lambda));
      double loss_value = t.value(loss)(0, 0);
      if (!std::isfinite(loss_value))
        throw Error("train: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                    std::to_string(b) + "; aborting");

      optimizer.zero_grad();
      t.backward(loss);
      optimizer.step();

      const auto n_samples = static_cast<double>(hi - lo);
      const auto n_trip = static_cast<double>(thi - tlo);
      sum_pred += t.value(l_pred)(0, 0) * n_samples;
      pred_n += static_cast<long>(hi - lo);
      sum_gnn += t.value(l_con_gnn)(0, 0) * n_trip;
      sum_llm += t.value(l_con_llm)(0, 0) * n_trip;
      con_n += static_cast<long>(thi - tlo);
      sum_total += loss_value * n_samples;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss_pred = sum_pred / static_cast<double>(pred_n);
    rec.loss_con_gnn = con_n ? sum_gnn / static_cast<double>(con_n) : 0.0;
    rec.loss_con_llm = con_n ? sum_llm / static_cast<double>(con_n) : 0.0;
    rec.loss_total = sum_total / static_cast<double>(pred_n);
    rec.val_accuracy = val_accuracy();
    history.epochs.push_back(rec);

    if (rec.val_accuracy > best_acc) {  // ties keep the earlier epoch
      best_acc = rec.val_accuracy;
      history.best_epoch = epoch;
      since_best = 0;
      best = snapshot_values(params);
    } else {
      since_best++;
    }
    if (since_best >= config.patience) {
      history.stop_reason = "early-stopping: no validation improvement for " +
                            std::to_string(config.patience) + " epochs";
      break;
    }
  }
  if (history.stop_reason.empty()) history.stop_reason = "max-epochs";
  history.best_val_accuracy = best_acc;
  restore_values(params, best);
  return history;
}

TripletDistanceGap triplet_distance_gap(Model& model, const LabeledDataset& heldout,
                                        std::uint64_t seed) {
  auto triplets = build_all_triplets(heldout, seed);
  TripletDistanceGap gap;
  if (triplets.empty()) return gap;

  std::map<std::string, std::pair<Vector, Vector>> reps;  // id -> (gnn, llm)
  auto rep_of = [&](const std::string& id) -> const std::pair<Vector, Vector>& {
    auto it = reps.find(id);
    if (it == reps.end()) {
      const auto& w = heldout.workflows.at(id);
      nn::Tape t;
      Model::BatchContext ctx(t);
      auto [g, l] = model.workflow_rep_vars(ctx, w);
      it = reps.emplace(id, std::make_pair(Vector(t.value(g).row(0)), Vector(t.value(l).row(0))))
               .first;
    }
    return it->second;
  };

  for (const auto& trip : triplets) {
    const auto& a = rep_of(trip.anchor);
    const auto& p = rep_of(trip.positive);
    const auto& n = rep_of(trip.negative);
    gap.pos_gnn += cosine_distance(a.first, p.first);
    gap.neg_gnn += cosine_distance(a.first, n.first);
    gap.pos_llm += cosine_distance(a.second, p.second);
    gap.neg_llm += cosine_distance(a.second, n.second);
  }
  const double n = static_cast<double>(triplets.size());
  gap.pos_gnn /= n;
  gap.neg_gnn /= n;
  gap.pos_llm /= n;
  gap.neg_llm /= n;
  gap.triplet_count = static_cast<long>(triplets.size());
  return gap;
}

std::string TrainingHistory::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["loss_pred"] = e.loss_pred;
    j["loss_con_gnn"] = e.loss_con_gnn;
    j["loss_con_llm"] = e.loss_con_llm;
    j["loss_total"] = e.loss_total;
    j["val_accuracy"] = e.val_accuracy;
    out += j.dump() + "\n";
  }
  nlohmann::ordered_json tail;
  tail["best_epoch"] = best_epoch;
  tail["best_val_accuracy"] = best_val_accuracy;
  tail["stop_reason"] = stop_reason;
  out += tail.dump() + "\n";
  return out;
}

void write_history_jsonl(const TrainingHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write history " + path.string());
  out << history.to_jsonl();
}

}  // namespace glow
