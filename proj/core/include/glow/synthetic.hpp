#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "glow/workflow.hpp"

namespace glow {

// Random-DAG space for the desk-scale search experiments and the synthetic
// training corpus.
struct SyntheticSpaceConfig {
  int min_nodes = 4;
  int max_nodes = 8;
  double min_edge_density = 0.3;  // probability of each forward pair
  double max_edge_density = 0.5;
  std::vector<std::string> prompt_pool;  // role strings; defaults below
  std::uint64_t seed = 1;
};

const std::vector<std::string>& default_prompt_pool();

AgentWorkflow sample_workflow(const SyntheticSpaceConfig& space, std::uint64_t seed);

struct MutationResult {
  AgentWorkflow workflow;
  bool changed = false;
  std::string kind;  // "add-edge", "remove-edge", "add-node", "swap-prompt", "none"
};

// Applies exactly one structural mutation chosen among the legal ones;
// add-edge candidates are restricted to acyclicity-preserving pairs. When no
// mutation is legal the input comes back unchanged with changed=false.
MutationResult mutate_workflow(const AgentWorkflow& w, const SyntheticSpaceConfig& space,
                               std::uint64_t seed);

// One ordering constraint: some node whose prompt contains from_keyword must
// reach (or, with direct_only, feed an edge into) a node containing to_keyword.
struct PathCondition {
  std::string from_keyword;
  std::string to_keyword;
  bool direct_only = false;
};

// Declarative success predicate: a conjunction of keyword-presence, ordering
// and longest-path-depth conditions.
struct TaskRule {
  std::vector<std::string> require_keywords;
  std::vector<PathCondition> require_paths;
  std::vector<PathCondition> forbid_paths;
  int min_longest_path = -1;  // -1 = unbounded
  int max_longest_path = -1;
};

bool rule_satisfied(const TaskRule& rule, const AgentWorkflow& w);

struct OracleSpec {
  std::map<std::string, TaskRule> rules;  // keyed by task_id
  double noise_rate = 0.0;                // Bernoulli flip in [0, 0.5)
  double cost_per_call = 100.0;           // simulated execution cost units
};

struct CostLedger {
  long oracle_calls = 0;
  long surrogate_calls = 0;
  double oracle_cost = 0.0;
  double surrogate_cost = 0.0;
  double total() const { return oracle_cost + surrogate_cost; }
};

// Evaluates the task's rule on the workflow and flips the outcome with the
// configured noise rate. Deterministic in (workflow content, task, seed).
// Charges cost_per_call to the ledger when one is given.
int ground_truth_oracle(const OracleSpec& spec, const AgentWorkflow& w,
                        const TaskInstruction& task, std::uint64_t seed,
                        CostLedger* ledger = nullptr);

// Noise-free rule score averaged over tasks; analysis-only, never charged.
double true_rule_score(const OracleSpec& spec, const AgentWorkflow& w,
                       const std::vector<TaskInstruction>& tasks);

// ---------------------------------------------------------------------------
// Labeled corpus drawn from the space and labeled by the oracle.

struct SyntheticCorpusConfig {
  SyntheticSpaceConfig space;
  int n_workflows = 400;
  int n_tasks = 20;
  double label_noise = 0.05;
  std::uint64_t seed = 7;
};

struct SyntheticCorpus {
  LabeledDataset train;       // 8:1:1 random split of workflow x task samples
  LabeledDataset validation;
  LabeledDataset test;
  OracleSpec oracle;
  std::vector<TaskInstruction> tasks;
};

// Task pool: four rule families over the prompt-pool keywords — keyword
// presence, pipeline depth, direct-edge ordering, reachability ordering.
// Keyword pairs never repeat across tasks, so task texts stay separable for
// bag-of-words embeddings.
SyntheticCorpus make_synthetic_corpus(const SyntheticCorpusConfig& config);

}  // namespace glow
