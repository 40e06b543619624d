#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glow/model.hpp"
#include "glow/synthetic.hpp"

namespace glow {

enum class EvaluatorKind { random, surrogate, oracle };

std::string to_string(EvaluatorKind k);
EvaluatorKind evaluator_from_string(const std::string& s);

struct SearchConfig {
  EvaluatorKind evaluator = EvaluatorKind::oracle;
  double budget = 50000.0;   // cost units; must cover the final verification
  int max_iterations = 100;  // proposal cap (the random evaluator is free)
  int restart_after = 20;    // non-improving proposals before a fresh restart
  double cost_pred = 1.0;    // charged per surrogate (workflow, task) call
  std::uint64_t seed = 1;
};

struct SearchIteration {
  int iteration = 0;  // logical timestamp, 1-based
  std::string workflow_id;
  std::string kind;            // "sample" or the mutation kind
  double evaluator_score = 0.0;
  double true_score = 0.0;     // noise-free rule score; diagnostic, not charged
  bool accepted = false;
  double cumulative_cost = 0.0;
};

struct SearchTrace {
  std::vector<SearchIteration> iterations;
  AgentWorkflow best_workflow;
  double best_evaluator_score = 0.0;
  double final_true_score = 0.0;  // oracle verification of the finalist
  CostLedger ledger;
  std::string evaluator;

  std::string to_jsonl() const;  // one iteration per line plus a summary line
};

// Hill-climbing with restarts over the synthetic space: propose mutants of
// the current candidate, score them with the configured evaluator, accept
// improvements, and verify the single finalist with the true oracle. The
// loop halts when the budget (net of the reserved verification cost) or the
// iteration cap is exhausted. Oracle scoring charges cost_per_call and
// surrogate scoring cost_pred per (workflow, task); random scoring is free.
SearchTrace run_search(const SyntheticSpaceConfig& space, const OracleSpec& oracle,
                       const std::vector<TaskInstruction>& tasks, Model* surrogate,
                       const SearchConfig& config);

struct StrategyStats {
  std::string evaluator;
  double budget = 0.0;
  double mean_score = 0.0;
  double stdev_score = 0.0;
  double mean_cost = 0.0;
  int runs = 0;
};

struct ComparisonReport {
  std::vector<StrategyStats> rows;  // one row per strategy per budget
  std::string to_json() const;
};

ComparisonReport compare_strategies(const SyntheticSpaceConfig& space, const OracleSpec& oracle,
                                    const std::vector<TaskInstruction>& tasks, Model* surrogate,
                                    const std::vector<double>& budgets,
                                    const std::vector<std::uint64_t>& seeds,
                                    const SearchConfig& base_config);

void write_search_trace(const SearchTrace& trace, const std::filesystem::path& path);

}  // namespace glow
