#include "glow/search.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "glow/error.hpp"
#include "glow/seed.hpp"

namespace glow {

std::string to_string(EvaluatorKind k) {
  switch (k) {
    case EvaluatorKind::random: return "random";
    case EvaluatorKind::surrogate: return "surrogate";
    case EvaluatorKind::oracle: return "oracle";
  }
  return "oracle";
}

EvaluatorKind evaluator_from_string(const std::string& s) {
  if (s == "random") return EvaluatorKind::random;
  if (s == "surrogate") return EvaluatorKind::surrogate;
  if (s == "oracle") return EvaluatorKind::oracle;
  throw ParseError("unknown evaluator '" + s + "' (expected random|surrogate|oracle)");
}

SearchTrace run_search(const SyntheticSpaceConfig& space, const OracleSpec& oracle,
                       const std::vector<TaskInstruction>& tasks, Model* surrogate,
                       const SearchConfig& config) {
  if (tasks.empty()) throw Error("run_search: no target tasks");
  if (config.evaluator == EvaluatorKind::surrogate && surrogate == nullptr)
    throw ConfigError("run_search: surrogate evaluator needs a model");
  const double verify_cost = oracle.cost_per_call * static_cast<double>(tasks.size());
  if (config.budget < verify_cost)
    throw Error("run_search: budget " + std::to_string(config.budget) +
                " cannot cover one final verification (" + std::to_string(verify_cost) + ")");

  SearchTrace trace;
  trace.evaluator = to_string(config.evaluator);
  std::mt19937_64 rng(derive_seed(config.seed, "search"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double eval_cost = config.evaluator == EvaluatorKind::oracle
                               ? oracle.cost_per_call * static_cast<double>(tasks.size())
                           : config.evaluator == EvaluatorKind::surrogate
                               ? config.cost_pred * static_cast<double>(tasks.size())
                               : 0.0;

  auto evaluate = [&](const AgentWorkflow& w) {
    switch (config.evaluator) {
      case EvaluatorKind::random:
        return unit(rng);
      case EvaluatorKind::surrogate: {
        double acc = 0.0;
        for (const auto& task : tasks) {
          trace.ledger.surrogate_calls++;
          trace.ledger.surrogate_cost += config.cost_pred;
          acc += surrogate->predict(w, task).score;
        }
        return acc / static_cast<double>(tasks.size());
      }
      case EvaluatorKind::oracle: {
        double acc = 0.0;
        for (const auto& task : tasks)
          acc += static_cast<double>(
              ground_truth_oracle(oracle, w, task, derive_seed(config.seed, "noise"), &trace.ledger));
        return acc / static_cast<double>(tasks.size());
      }
    }
    return 0.0;
  };

  auto record = [&](int iter, const AgentWorkflow& w, const std::string& kind, double score,
                    bool accepted) {
    trace.iterations.push_back({iter, w.workflow_id, kind, score,
                                true_rule_score(oracle, w, tasks), accepted,
                                trace.ledger.total()});
  };

  AgentWorkflow current = sample_workflow(space, derive_seed(config.seed, "search-init"));
  double current_score = evaluate(current);
  AgentWorkflow best = current;
  double best_score = current_score;
  record(1, current, "sample", current_score, true);

  int stale = 0;
  int iter = 1;
  while (iter < config.max_iterations &&
         trace.ledger.total() + eval_cost + verify_cost <= config.budget) {
    iter++;
    AgentWorkflow candidate;
    std::string kind;
    if (stale >= config.restart_after) {
      candidate = sample_workflow(space, derive_seed(config.seed, "search-restart", rng()));
      kind = "restart-sample";
      stale = 0;
    } else {
      auto mutation = mutate_workflow(current, space, rng());
      candidate = std::move(mutation.workflow);
      kind = mutation.kind;
    }
    candidate.workflow_id = current.workflow_id.substr(0, 15) + "-" + std::to_string(iter);
    double score = evaluate(candidate);
    bool accepted = score > current_score;
    if (accepted) {
      current = candidate;
      current_score = score;
      stale = 0;
      if (score > best_score) {
        best = candidate;
        best_score = score;
      }
    } else {
      stale++;
    }
    record(iter, candidate, kind, score, accepted);
  }

  // one verification of the finalist with the true oracle
  double verified = 0.0;
  for (const auto& task : tasks)
    verified += static_cast<double>(
        ground_truth_oracle(oracle, best, task, derive_seed(config.seed, "verify"), &trace.ledger));
  trace.final_true_score = verified / static_cast<double>(tasks.size());
  trace.best_workflow = best;
  trace.best_evaluator_score = best_score;
  return trace;
}

ComparisonReport compare_strategies(const SyntheticSpaceConfig& space, const OracleSpec& oracle,
                                    const std::vector<TaskInstruction>& tasks, Model* surrogate,
                                    const std::vector<double>& budgets,
                                    const std::vector<std::uint64_t>& seeds,
                                    const SearchConfig& base_config) {
  ComparisonReport report;
  for (double budget : budgets) {
    for (EvaluatorKind kind :
         {EvaluatorKind::random, EvaluatorKind::surrogate, EvaluatorKind::oracle}) {
      if (kind == EvaluatorKind::surrogate && surrogate == nullptr) continue;
      StrategyStats stats;
      stats.evaluator = to_string(kind);
      stats.budget = budget;
      std::vector<double> scores, costs;
      for (std::uint64_t seed : seeds) {
        SearchConfig config = base_config;
        config.evaluator = kind;
        config.budget = budget;
        config.seed = seed;
        auto trace = run_search(space, oracle, tasks, surrogate, config);
        scores.push_back(trace.final_true_score);
        costs.push_back(trace.ledger.total());
      }
      const double n = static_cast<double>(scores.size());
      for (double s : scores) stats.mean_score += s;
      stats.mean_score /= n;
      for (double s : scores)
        stats.stdev_score += (s - stats.mean_score) * (s - stats.mean_score);
      stats.stdev_score = n > 1 ? std::sqrt(stats.stdev_score / (n - 1)) : 0.0;
      for (double c : costs) stats.mean_cost += c;
      stats.mean_cost /= n;
      stats.runs = static_cast<int>(scores.size());
      report.rows.push_back(stats);
    }
  }
  return report;
}

std::string SearchTrace::to_jsonl() const {
  std::string out;
  for (const auto& it : iterations) {
    nlohmann::ordered_json j;
    j["iteration"] = it.iteration;
    j["workflow_id"] = it.workflow_id;
    j["kind"] = it.kind;
    j["evaluator"] = evaluator;
    j["evaluator_score"] = it.evaluator_score;
    j["true_score"] = it.true_score;
    j["accepted"] = it.accepted;
    j["cumulative_cost"] = it.cumulative_cost;
    out += j.dump() + "\n";
  }
  nlohmann::ordered_json tail;
  tail["best_workflow_id"] = best_workflow.workflow_id;
  tail["best_evaluator_score"] = best_evaluator_score;
  tail["final_true_score"] = final_true_score;
  tail["total_cost"] = ledger.total();
  tail["oracle_calls"] = ledger.oracle_calls;
  tail["surrogate_calls"] = ledger.surrogate_calls;
  out += tail.dump() + "\n";
  return out;
}

std::string ComparisonReport::to_json() const {
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["evaluator"] = r.evaluator;
    j["budget"] = r.budget;
    j["mean_final_true_score"] = r.mean_score;
    j["stdev_final_true_score"] = r.stdev_score;
    j["mean_total_cost"] = r.mean_cost;
    j["runs"] = r.runs;
    rows_json.push_back(j);
  }
  nlohmann::ordered_json root;
  root["rows"] = rows_json;
  return root.dump(2) + "\n";
}

void write_search_trace(const SearchTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write search trace " + path.string());
  out << trace.to_jsonl();
}

}  // namespace glow
