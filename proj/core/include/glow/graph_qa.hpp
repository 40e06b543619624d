#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "glow/workflow.hpp"

namespace glow {

// The six graph-reasoning dimensions used for instruction data and grading.
enum class QaTaskType { DBP, DNE, NPR, REACH, KNI, TSORT };

constexpr std::array<QaTaskType, 6> kQaTaskTypes = {
    QaTaskType::DBP, QaTaskType::DNE, QaTaskType::NPR,
    QaTaskType::REACH, QaTaskType::KNI, QaTaskType::TSORT};

std::string to_string(QaTaskType t);
QaTaskType qa_task_type_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Exact-answer oracles. All of them throw NotFoundError on unknown node ids.

struct DegreeInfo {
  int in_degree = 0;
  int out_degree = 0;
};

DegreeInfo oracle_degrees(const AgentWorkflow& w, int node_id);

// Total-degree mean 2|E|/|V| rounded to two decimals. This convention is
// recorded in the corpus metadata so graded answers are well-defined.
double oracle_average_degree(const AgentWorkflow& w);

struct Neighbors {
  std::set<int> in_neighbors;
  std::set<int> out_neighbors;
};

Neighbors oracle_neighbors(const AgentWorkflow& w, int node_id);

std::string oracle_prompt(const AgentWorkflow& w, int node_id);

struct Reachability {
  bool reachable = false;
  int shortest_length = -1;  // edge count; -1 when unreachable
};

// BFS over directed edges; (src == src) is reachable with length 0.
Reachability oracle_reachability(const AgentWorkflow& w, int src, int dst);

struct KeyNodes {
  std::set<int> sources;  // zero in-degree
  std::set<int> sinks;    // zero out-degree
};

KeyNodes oracle_key_nodes(const AgentWorkflow& w);

// Kahn's algorithm with smallest-node-id tie-breaking; deterministic.
// Throws Error if the workflow is cyclic.
std::vector<int> oracle_toposort(const AgentWorkflow& w);

struct ToposortCheck {
  bool valid = false;
  std::string reason;  // set when invalid
};

// Accepts any permutation of all nodes in which every edge points forward.
ToposortCheck is_valid_toposort(const AgentWorkflow& w, const std::vector<int>& ordering);

// Longest directed path counted in edges (0 for edgeless graphs).
int longest_path_length(const AgentWorkflow& w);

// ---------------------------------------------------------------------------
// QA corpus generation and grading.

struct GraphQAItem {
  std::string item_id;
  std::string workflow_id;
  QaTaskType task_type = QaTaskType::DBP;
  std::string question;        // embeds the serialized workflow text
  nlohmann::json gold_answer;  // canonical value (int, real, string, id list)
};

// The text a perfect answerer would produce: integers plain, reals with two
// decimals, id sets/orderings as "[a, b, c]", prompts verbatim.
std::string render_canonical_answer(const GraphQAItem& item);

struct QaCorpus {
  std::vector<GraphQAItem> items;
  std::vector<std::string> warnings;  // e.g. workflow too small for the quota
};

// For each workflow and each type, up to samples_per_type items. Items are
// distinct in (queried target, phrasing template); targets are preferred
// distinct and phrasings rotate once targets are exhausted. Deterministic
// given (workflows, seed); output order is workflow x type x sample index.
QaCorpus generate_qa_dataset(const std::vector<AgentWorkflow>& workflows,
                             int samples_per_type, std::uint64_t seed);

struct ItemVerdict {
  std::string item_id;
  QaTaskType task_type = QaTaskType::DBP;
  bool correct = false;
  std::string verdict;  // "correct", "wrong", "unparseable", "missing"
};

struct GradingReport {
  std::map<QaTaskType, double> per_type_accuracy;  // unit interval
  double average = 0.0;  // unweighted mean over the six task types
  std::vector<ItemVerdict> verdicts;
};

// Normalization: numbers compared after parsing (reals to two decimals), id
// sets order-insensitively, prompts after whitespace trimming; TSORT answers
// are graded by is_valid_toposort against the graph embedded in the question.
// Missing answers count wrong.
GradingReport grade_answers(const std::vector<GraphQAItem>& items,
                            const std::map<std::string, std::string>& answers);

// Table-3-style report: {"DBP": %, ..., "TSORT": %, "Average": %}.
std::string grading_report_to_json(const GradingReport& report);

// JSONL persistence, one item per line.
void write_qa_jsonl(const std::vector<GraphQAItem>& items, const std::filesystem::path& path);
std::vector<GraphQAItem> read_qa_jsonl(const std::filesystem::path& path);

// Grading input JSONL: {"item_id": str, "answer": str} per line.
void write_answers_jsonl(const std::map<std::string, std::string>& answers,
                         const std::filesystem::path& path);
std::map<std::string, std::string> read_answers_jsonl(const std::filesystem::path& path);

// Conventions baked into a generated corpus (template version, rounding,
// canonical answer forms); written beside the JSONL.
nlohmann::json qa_corpus_metadata(int samples_per_type, std::uint64_t seed);

}  // namespace glow
