#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace glow {

// An agentic workflow abstracted as a DAG: agent nodes carry prompts, directed
// edges carry the information flow. Node ids are integers local to one
// workflow; global identity is (workflow_id, node_id).
struct AgentNode {
  int id = 0;
  std::string prompt;
};

struct Edge {
  int source = 0;
  int target = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct AgentWorkflow {
  std::string workflow_id;
  std::vector<AgentNode> nodes;
  std::vector<Edge> edges;

  bool has_node(int id) const;
  const AgentNode& node(int id) const;  // throws NotFoundError
  // In/out adjacency keyed by node id, edge order preserved.
  std::map<int, std::vector<int>> out_adjacency() const;
  std::map<int, std::vector<int>> in_adjacency() const;
};

struct TaskInstruction {
  std::string task_id;
  std::string text;
};

struct LabeledSample {
  std::string workflow_id;
  std::string task_id;
  int label = 0;  // {0,1}: 1 iff the workflow completed the task
};

enum class Split { train, validation, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct LabeledDataset {
  std::map<std::string, AgentWorkflow> workflows;
  std::map<std::string, TaskInstruction> tasks;
  std::vector<LabeledSample> samples;
  Split split = Split::train;
};

// Violations are data, not exceptions: a report lists every broken invariant
// with the offending node/edge identity. Empty prompts are warnings only,
// since generated corpora may contain placeholder agents.
struct Violation {
  std::string code;     // e.g. "cycle", "unknown-endpoint", "duplicate-edge"
  std::string message;  // human-readable, names the node/edge
};

struct ValidationReport {
  std::vector<Violation> errors;
  std::vector<Violation> warnings;
  bool ok() const { return errors.empty(); }
};

ValidationReport validate_workflow(const AgentWorkflow& w);

// Dataset JSON layout:
//   {"workflows":[{"workflow_id":str,"nodes":[{"id":int,"prompt":str}],
//                  "edges":[[src,dst],...]}],
//    "tasks":[{"task_id":str,"text":str}],
//    "samples":[{"workflow_id":str,"task_id":str,"label":0|1}]}
// load validates every workflow and checks referential integrity; save emits
// the canonical form (sorted ids, fixed key order) so load∘save is identity.
LabeledDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const LabeledDataset& d, const std::filesystem::path& path);
std::string dataset_to_json(const LabeledDataset& d);
LabeledDataset dataset_from_json(const std::string& text, const std::string& origin = "<string>");

// Fraction of this workflow's samples with label 1.
double success_rate(const LabeledDataset& d, const std::string& workflow_id);

}  // namespace glow
