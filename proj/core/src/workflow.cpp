#include "glow/workflow.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "glow/error.hpp"

namespace glow {

bool AgentWorkflow::has_node(int id) const {
  return std::any_of(nodes.begin(), nodes.end(),
                     [&](const AgentNode& n) { return n.id == id; });
}

const AgentNode& AgentWorkflow::node(int id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return n;
  }
  throw NotFoundError("workflow '" + workflow_id + "' has no node " + std::to_string(id));
}

std::map<int, std::vector<int>> AgentWorkflow::out_adjacency() const {
  std::map<int, std::vector<int>> adj;
  for (const auto& n : nodes) adj[n.id];
  for (const auto& e : edges) adj[e.source].push_back(e.target);
  return adj;
}

std::map<int, std::vector<int>> AgentWorkflow::in_adjacency() const {
  std::map<int, std::vector<int>> adj;
  for (const auto& n : nodes) adj[n.id];
  for (const auto& e : edges) adj[e.target].push_back(e.source);
  return adj;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw ParseError("unknown split '" + s + "' (expected train|validation|test)");
}

namespace {

std::string edge_str(const Edge& e) {
  return "(" + std::to_string(e.source) + "," + std::to_string(e.target) + ")";
}

// Kahn peel: true iff the declared edge relation is acyclic. Assumes
// endpoints were already checked against the node set.
bool is_acyclic(const AgentWorkflow& w) {
  std::map<int, int> indeg;
  for (const auto& n : w.nodes) indeg[n.id] = 0;
  std::map<int, std::vector<int>> out;
  for (const auto& e : w.edges) {
    if (!indeg.count(e.source) || !indeg.count(e.target)) continue;
    out[e.source].push_back(e.target);
    indeg[e.target]++;
  }
  std::deque<int> ready;
  for (const auto& [id, d] : indeg)
    if (d == 0) ready.push_back(id);
  std::size_t peeled = 0;
  while (!ready.empty()) {
    int v = ready.front();
    ready.pop_front();
    peeled++;
    for (int t : out[v])
      if (--indeg[t] == 0) ready.push_back(t);
  }
  return peeled == w.nodes.size();
}

}  // namespace

ValidationReport validate_workflow(const AgentWorkflow& w) {
  ValidationReport report;
  std::set<int> ids;
  for (const auto& n : w.nodes) {
    if (n.id < 0)
      report.errors.push_back({"negative-id", "node id " + std::to_string(n.id) + " is negative"});
    if (!ids.insert(n.id).second)
      report.errors.push_back({"duplicate-node", "duplicate node id " + std::to_string(n.id)});
    if (n.prompt.empty())
      report.warnings.push_back({"empty-prompt", "node " + std::to_string(n.id) + " has an empty prompt"});
  }
  std::set<Edge> seen;
  bool endpoints_ok = true;
  for (const auto& e : w.edges) {
    for (int v : {e.source, e.target}) {
      if (!ids.count(v)) {
        report.errors.push_back({"unknown-endpoint",
                                 "edge " + edge_str(e) + " references unknown endpoint " + std::to_string(v)});
        endpoints_ok = false;
      }
    }
    if (e.source == e.target)
      report.errors.push_back({"self-loop", "self-loop on node " + std::to_string(e.source)});
    if (!seen.insert(e).second)
      report.errors.push_back({"duplicate-edge", "duplicate edge " + edge_str(e)});
  }
  if (endpoints_ok && !is_acyclic(w))
    report.errors.push_back({"cycle", "edge relation contains a cycle"});
  return report;
}

namespace {

using json = nlohmann::ordered_json;

json workflow_to_json(const AgentWorkflow& w) {
  json jw;
  jw["workflow_id"] = w.workflow_id;
  jw["nodes"] = json::array();
  for (const auto& n : w.nodes) jw["nodes"].push_back({{"id", n.id}, {"prompt", n.prompt}});
  jw["edges"] = json::array();
  for (const auto& e : w.edges) jw["edges"].push_back({e.source, e.target});
  return jw;
}

AgentWorkflow workflow_from_json(const json& jw) {
  AgentWorkflow w;
  w.workflow_id = jw.at("workflow_id").get<std::string>();
  for (const auto& jn : jw.at("nodes"))
    w.nodes.push_back({jn.at("id").get<int>(), jn.at("prompt").get<std::string>()});
  for (const auto& je : jw.at("edges")) {
    if (!je.is_array() || je.size() != 2)
      throw ParseError("workflow '" + w.workflow_id + "': edge must be a 2-element array");
    w.edges.push_back({je[0].get<int>(), je[1].get<int>()});
  }
  return w;
}

}  // namespace

std::string dataset_to_json(const LabeledDataset& d) {
  json root;
  root["split"] = to_string(d.split);
  root["workflows"] = json::array();
  for (const auto& [id, w] : d.workflows) root["workflows"].push_back(workflow_to_json(w));
  root["tasks"] = json::array();
  for (const auto& [id, t] : d.tasks) root["tasks"].push_back({{"task_id", t.task_id}, {"text", t.text}});
  root["samples"] = json::array();
  for (const auto& s : d.samples)
    root["samples"].push_back({{"workflow_id", s.workflow_id}, {"task_id", s.task_id}, {"label", s.label}});
  return root.dump(2) + "\n";
}

LabeledDataset dataset_from_json(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports a byte offset; add the line for easier triage.
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
      if (text[i] == '\n') line++;
    throw ParseError(origin + ":" + std::to_string(line) + ": " + e.what());
  }

  LabeledDataset d;
  try {
    if (root.contains("split")) d.split = split_from_string(root["split"].get<std::string>());
    for (const auto& jw : root.at("workflows")) {
      AgentWorkflow w = workflow_from_json(jw);
      auto report = validate_workflow(w);
      if (!report.ok())
        throw ParseError("workflow '" + w.workflow_id + "' invalid: " + report.errors.front().message);
      if (d.workflows.count(w.workflow_id))
        throw ParseError("duplicate workflow_id '" + w.workflow_id + "'");
      d.workflows.emplace(w.workflow_id, std::move(w));
    }
    for (const auto& jt : root.at("tasks")) {
      TaskInstruction t{jt.at("task_id").get<std::string>(), jt.at("text").get<std::string>()};
      if (t.text.empty()) throw ParseError("task '" + t.task_id + "' has empty text");
      if (d.tasks.count(t.task_id)) throw ParseError("duplicate task_id '" + t.task_id + "'");
      d.tasks.emplace(t.task_id, std::move(t));
    }
    std::set<std::pair<std::string, std::string>> pair_seen;
    for (const auto& js : root.at("samples")) {
      LabeledSample s{js.at("workflow_id").get<std::string>(), js.at("task_id").get<std::string>(),
                      js.at("label").get<int>()};
      if (s.label != 0 && s.label != 1)
        throw ParseError("sample (" + s.workflow_id + "," + s.task_id + "): label must be 0 or 1");
      if (!d.workflows.count(s.workflow_id))
        throw ParseError("sample references missing workflow '" + s.workflow_id + "'");
      if (!d.tasks.count(s.task_id))
        throw ParseError("sample references missing task '" + s.task_id + "'");
      if (!pair_seen.insert({s.workflow_id, s.task_id}).second)
        throw ParseError("duplicate sample (" + s.workflow_id + "," + s.task_id + ")");
      d.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  return d;
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return dataset_from_json(buf.str(), path.string());
}

void save_dataset(const LabeledDataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file " + path.string());
  out << dataset_to_json(d);
}

double success_rate(const LabeledDataset& d, const std::string& workflow_id) {
  long hits = 0, total = 0;
  for (const auto& s : d.samples) {
    if (s.workflow_id != workflow_id) continue;
    total++;
    hits += s.label;
  }
  if (total == 0)
    throw NotFoundError("workflow '" + workflow_id + "' has no samples");
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace glow
