#pragma once

#include <map>
#include <string>
#include <vector>

#include "glow/model.hpp"
#include "glow/workflow.hpp"

namespace glow {

// Percentage of samples whose binarized score matches the label. Scores at
// exactly the threshold binarize to 1; the convention is part of the report.
double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                double threshold = 0.5);

// Mean over k = 1..K of |top_k(gt) ∩ top_k(pred)| / k, as a percentage.
// Ties in a rate map are broken by ascending workflow id.
double utility(const std::map<std::string, double>& gt_rates,
               const std::map<std::string, double>& pred_rates);

// Ranked ids: descending rate, ascending id on ties.
std::vector<std::string> rank_by_rate(const std::map<std::string, double>& rates);

struct EvalReport {
  double accuracy_pct = 0.0;
  double utility_pct = 0.0;
  long sample_count = 0;
  std::map<std::string, double> gt_rates;         // per test workflow
  std::map<std::string, double> pred_rates;       // mean predicted score
  std::map<int, double> topk_overlap;             // k -> overlap ratio
  std::vector<std::string> warnings;
  std::string binarize_rule = "score >= 0.5 maps to 1";

  std::string to_json() const;
};

// Accuracy over all samples of the dataset plus ranking utility over its
// workflows (predicted success rate = mean score across the workflow's
// samples). Workflows without samples are excluded from utility with a
// warning. Deterministic in evaluation mode.
EvalReport evaluate(Model& model, const LabeledDataset& dataset);

}  // namespace glow
