#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glow/model.hpp"
#include "glow/nn/optim.hpp"
#include "glow/workflow.hpp"

namespace glow {

struct TrainConfig {
  int d = 256;
  double learning_rate = 1e-4;
  double weight_decay = 0.01;
  int batch_size = 512;
  int max_epochs = 200;
  int patience = 30;            // epochs without validation improvement
  double lambda = 1.0;          // contrastive weight
  double alpha = 0.2;           // contrastive margin
  int gnn_layers = 2;
  int fusion_layers = 2;
  int fusion_heads = 4;
  std::uint64_t seed = 17;
  double positive_class_weight = 1.0;  // optional; 1.0 = plain BCE
  // self-supervised pretraining of the structural encoder
  int pretrain_steps = 200;
  double pretrain_learning_rate = 5e-3;

  void validate() const;  // throws ConfigError on bad combinations
};

// Mean binary cross-entropy over scores in (0,1). positive_class_weight
// scales the y=1 term; the default leaves it unweighted.
double bce_prediction_loss(const std::vector<double>& scores, const std::vector<int>& labels,
                           double positive_class_weight = 1.0);

// Per-task contrastive unit: anchor and positive succeeded at the task, the
// negative failed it.
struct Triplet {
  std::string task_id;
  std::string anchor;
  std::string positive;
  std::string negative;
};

// One triplet per label-1 anchor: positive drawn uniformly among the other
// successes, negative uniformly among failures. Empty when the task has
// fewer than two successes or no failure.
std::vector<Triplet> build_triplets(const LabeledDataset& d, const std::string& task_id,
                                    std::uint64_t seed);

// Concatenation over all tasks in ascending task id order.
std::vector<Triplet> build_all_triplets(const LabeledDataset& d, std::uint64_t seed);

// 1 - a.b / ((|a| + 1e-12)(|b| + 1e-12)); the epsilon guards zero norms.
double cosine_distance(const Vector& a, const Vector& b);

// Mean over triplets of max(0, d(a,p) - d(a,n) + alpha) on the given
// representations (one branch at a time).
double triplet_contrastive_loss(const std::vector<Triplet>& triplets,
                                const std::map<std::string, Vector>& reps, double alpha);

// l_pred + (lambda / 2) * (l_con_gnn + l_con_llm).
double total_loss(double l_pred, double l_con_gnn, double l_con_llm, double lambda);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double loss_pred = 0.0;
  double loss_con_gnn = 0.0;
  double loss_con_llm = 0.0;
  double loss_total = 0.0;
  double val_accuracy = 0.0;  // percentage
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  std::string stop_reason;

  std::string to_jsonl() const;  // one epoch per line plus a summary line
};

struct PretrainResult {
  std::vector<double> loss_curve;  // total loss per step, step 0 = initial
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool aborted_non_finite = false;
};

// Minimizes node + edge reconstruction over the given workflows (full batch
// per step). Non-finite loss aborts with the last finite parameters kept.
PretrainResult pretrain_gnn(Model& model, PretrainHeads& heads,
                            const std::vector<const AgentWorkflow*>& workflows,
                            const TrainConfig& config);

// Convenience over a dataset's (training-split) workflows in id order.
PretrainResult pretrain_gnn(Model& model, PretrainHeads& heads, const LabeledDataset& train,
                            const TrainConfig& config);

// End-to-end optimization of prediction + contrastive losses with per-epoch
// validation accuracy, early stopping, and best-checkpoint restoration.
// Providers stay frozen; only model parameters move.
TrainingHistory train(Model& model, const LabeledDataset& train_split,
                      const LabeledDataset& val_split, const TrainConfig& config);

// Distance diagnostics on triplets built from a held-out split with a fixed
// seed: mean cos_dist(anchor, positive) and (anchor, negative) per branch.
struct TripletDistanceGap {
  double pos_gnn = 0.0, neg_gnn = 0.0;
  double pos_llm = 0.0, neg_llm = 0.0;
  long triplet_count = 0;
  double gap_gnn() const { return neg_gnn - pos_gnn; }
  double gap_llm() const { return neg_llm - pos_llm; }
};

TripletDistanceGap triplet_distance_gap(Model& model, const LabeledDataset& heldout,
                                        std::uint64_t seed);

void write_history_jsonl(const TrainingHistory& history, const std::filesystem::path& path);

}  // namespace glow
