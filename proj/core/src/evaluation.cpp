#include "glow/evaluation.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "glow/error.hpp"

namespace glow {

double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                double threshold) {
  if (scores.empty() || scores.size() != labels.size())
    throw Error("accuracy: need equally many scores and labels, at least one");
  long correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    int pred = scores[i] >= threshold ? 1 : 0;
    if (pred == labels[i]) correct++;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(scores.size());
}

std::vector<std::string> rank_by_rate(const std::map<std::string, double>& rates) {
  std::vector<std::pair<std::string, double>> items(rates.begin(), rates.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> ids;
  ids.reserve(items.size());
  for (auto& [id, rate] : items) ids.push_back(id);
  return ids;
}

double utility(const std::map<std::string, double>& gt_rates,
               const std::map<std::string, double>& pred_rates) {
  if (gt_rates.empty()) throw Error("utility: empty rate maps");
  if (gt_rates.size() != pred_rates.size() ||
      !std::equal(gt_rates.begin(), gt_rates.end(), pred_rates.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; })) {
    std::string diff;
    for (const auto& [id, r] : gt_rates)
      if (!pred_rates.count(id)) diff += " -" + id;
    for (const auto& [id, r] : pred_rates)
      if (!gt_rates.count(id)) diff += " +" + id;
    throw Error("utility: key sets differ:" + diff);
  }
  auto gt_order = rank_by_rate(gt_rates);
  auto pred_order = rank_by_rate(pred_rates);
  const std::size_t K = gt_order.size();
  double acc = 0.0;
  std::set<std::string> gt_top, pred_top;
  for (std::size_t k = 1; k <= K; ++k) {
    gt_top.insert(gt_order[k - 1]);
    pred_top.insert(pred_order[k - 1]);
    std::size_t overlap = 0;
    for (const auto& id : pred_top)
      if (gt_top.count(id)) overlap++;
    acc += static_cast<double>(overlap) / static_cast<double>(k);
  }
  return 100.0 * acc / static_cast<double>(K);
}

EvalReport evaluate(Model& model, const LabeledDataset& dataset) {
  if (dataset.samples.empty()) throw Error("evaluate: dataset has no samples");
  EvalReport report;

  std::vector<double> scores;
  std::vector<int> labels;
  std::map<std::string, std::pair<double, long>> pred_acc;  // sum, count
  std::map<std::string, std::pair<long, long>> gt_acc;      // hits, count
  for (const auto& s : dataset.samples) {
    const auto& w = dataset.workflows.at(s.workflow_id);
    const auto& task = dataset.tasks.at(s.task_id);
    double score = model.predict(w, task).score;
    scores.push_back(score);
    labels.push_back(s.label);
    auto& [sum, cnt] = pred_acc[s.workflow_id];
    sum += score;
    cnt++;
    auto& [hits, total] = gt_acc[s.workflow_id];
    hits += s.label;
    total++;
  }
  report.sample_count = static_cast<long>(scores.size());
  report.accuracy_pct = accuracy(scores, labels);

  for (const auto& [id, w] : dataset.workflows) {
    auto it = gt_acc.find(id);
    if (it == gt_acc.end()) {
      report.warnings.push_back("workflow '" + id + "' has no samples; excluded from utility");
      continue;
    }
    report.gt_rates[id] =
        static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
    auto& [sum, cnt] = pred_acc.at(id);
    report.pred_rates[id] = sum / static_cast<double>(cnt);
  }
  report.utility_pct = utility(report.gt_rates, report.pred_rates);

  auto gt_order = rank_by_rate(report.gt_rates);
  auto pred_order = rank_by_rate(report.pred_rates);
  std::set<std::string> gt_top, pred_top;
  for (std::size_t k = 1; k <= gt_order.size(); ++k) {
    gt_top.insert(gt_order[k - 1]);
    pred_top.insert(pred_order[k - 1]);
    std::size_t overlap = 0;
    for (const auto& id : pred_top)
      if (gt_top.count(id)) overlap++;
    report.topk_overlap[static_cast<int>(k)] =
        static_cast<double>(overlap) / static_cast<double>(k);
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy_pct;
  j["utility"] = utility_pct;
  j["sample_count"] = sample_count;
  j["binarize_rule"] = binarize_rule;
  j["ground_truth_success_rates"] = gt_rates;
  j["predicted_success_rates"] = pred_rates;
  nlohmann::ordered_json overlap = nlohmann::ordered_json::object();
  for (const auto& [k, v] : topk_overlap) overlap[std::to_string(k)] = v;
  j["topk_overlap"] = overlap;
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

}  // namespace glow
