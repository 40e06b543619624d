#include "glow/graph_qa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>

#include "glow/error.hpp"
#include "glow/seed.hpp"
#include "glow/textualize.hpp"

namespace glow {

std::string to_string(QaTaskType t) {
  switch (t) {
    case QaTaskType::DBP: return "DBP";
    case QaTaskType::DNE: return "DNE";
    case QaTaskType::NPR: return "NPR";
    case QaTaskType::REACH: return "REACH";
    case QaTaskType::KNI: return "KNI";
    case QaTaskType::TSORT: return "TSORT";
  }
  return "DBP";
}

QaTaskType qa_task_type_from_string(const std::string& s) {
  for (auto t : kQaTaskTypes)
    if (to_string(t) == s) return t;
  throw ParseError("unknown QA task type '" + s + "'");
}

// ---------------------------------------------------------------------------
// Oracles

DegreeInfo oracle_degrees(const AgentWorkflow& w, int node_id) {
  if (!w.has_node(node_id))
    throw NotFoundError("workflow '" + w.workflow_id + "' has no node " + std::to_string(node_id));
  DegreeInfo info;
  for (const auto& e : w.edges) {
    if (e.target == node_id) info.in_degree++;
    if (e.source == node_id) info.out_degree++;
  }
  return info;
}

double oracle_average_degree(const AgentWorkflow& w) {
  if (w.nodes.empty()) throw Error("average degree undefined for empty workflow");
  double avg = 2.0 * static_cast<double>(w.edges.size()) / static_cast<double>(w.nodes.size());
  return std::round(avg * 100.0) / 100.0;
}

Neighbors oracle_neighbors(const AgentWorkflow& w, int node_id) {
  if (!w.has_node(node_id))
    throw NotFoundError("workflow '" + w.workflow_id + "' has no node " + std::to_string(node_id));
  Neighbors n;
  for (const auto& e : w.edges) {
    if (e.target == node_id) n.in_neighbors.insert(e.source);
    if (e.source == node_id) n.out_neighbors.insert(e.target);
  }
  return n;
}

std::string oracle_prompt(const AgentWorkflow& w, int node_id) {
  return w.node(node_id).prompt;
}

Reachability oracle_reachability(const AgentWorkflow& w, int src, int dst) {
  for (int v : {src, dst})
    if (!w.has_node(v))
      throw NotFoundError("workflow '" + w.workflow_id + "' has no node " + std::to_string(v));
  if (src == dst) return {true, 0};
  auto out = w.out_adjacency();
  std::map<int, int> dist;
  std::deque<int> queue{src};
  dist[src] = 0;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int t : out[v]) {
      if (dist.count(t)) continue;
      dist[t] = dist[v] + 1;
      if (t == dst) return {true, dist[t]};
      queue.push_back(t);
    }
  }
  return {false, -1};
}

KeyNodes oracle_key_nodes(const AgentWorkflow& w) {
  KeyNodes k;
  auto in = w.in_adjacency();
  auto out = w.out_adjacency();
  for (const auto& n : w.nodes) {
    if (in[n.id].empty()) k.sources.insert(n.id);
    if (out[n.id].empty()) k.sinks.insert(n.id);
  }
  return k;
}

std::vector<int> oracle_toposort(const AgentWorkflow& w) {
  std::map<int, int> indeg;
  for (const auto& n : w.nodes) indeg[n.id] = 0;
  auto out = w.out_adjacency();
  for (const auto& e : w.edges) indeg[e.target]++;
  // min-heap on node id gives the smallest-id tie-break
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (const auto& [id, d] : indeg)
    if (d == 0) ready.push(id);
  std::vector<int> order;
  order.reserve(w.nodes.size());
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int t : out[v])
      if (--indeg[t] == 0) ready.push(t);
  }
  if (order.size() != w.nodes.size())
    throw Error("workflow '" + w.workflow_id + "' is cyclic; no topological order exists");
  return order;
}

ToposortCheck is_valid_toposort(const AgentWorkflow& w, const std::vector<int>& ordering) {
  if (ordering.size() != w.nodes.size())
    return {false, "ordering has " + std::to_string(ordering.size()) + " entries, graph has " +
                       std::to_string(w.nodes.size()) + " nodes"};
  std::map<int, int> position;
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    if (!w.has_node(ordering[i]))
      return {false, "ordering contains unknown node " + std::to_string(ordering[i])};
    if (!position.emplace(ordering[i], static_cast<int>(i)).second)
      return {false, "ordering repeats node " + std::to_string(ordering[i])};
  }
  for (const auto& e : w.edges) {
    if (position.at(e.source) >= position.at(e.target))
      return {false, "edge (" + std::to_string(e.source) + "," + std::to_string(e.target) +
                         ") points backwards"};
  }
  return {true, ""};
}

int longest_path_length(const AgentWorkflow& w) {
  auto order = oracle_toposort(w);
  auto in = w.in_adjacency();
  std::map<int, int> depth;
  int best = 0;
  for (int v : order) {
    int d = 0;
    for (int p : in[v]) d = std::max(d, depth[p] + 1);
    depth[v] = d;
    best = std::max(best, d);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Corpus generation

namespace {

constexpr int kNumPhrasings = 3;

// A target identifies what one question asks about within its type.
struct Target {
  std::string kind;  // "in", "out", "avg", "pred", "succ", "prompt", "pair", "sources", "sinks", "graph"
  int a = -1;
  int b = -1;
};

std::vector<Target> target_pool(const AgentWorkflow& w, QaTaskType type) {
  std::vector<int> ids;
  for (const auto& n : w.nodes) ids.push_back(n.id);
  std::sort(ids.begin(), ids.end());
  std::vector<Target> pool;
  switch (type) {
    case QaTaskType::DBP:
      for (int v : ids) pool.push_back({"in", v});
      for (int v : ids) pool.push_back({"out", v});
      pool.push_back({"avg"});
      break;
    case QaTaskType::DNE:
      for (int v : ids) pool.push_back({"pred", v});
      for (int v : ids) pool.push_back({"succ", v});
      break;
    case QaTaskType::NPR:
      for (int v : ids) pool.push_back({"prompt", v});
      break;
    case QaTaskType::REACH:
      for (int u : ids)
        for (int v : ids) pool.push_back({"pair", u, v});
      break;
    case QaTaskType::KNI:
      pool.push_back({"sources"});
      pool.push_back({"sinks"});
      break;
    case QaTaskType::TSORT:
      pool.push_back({"graph"});
      break;
  }
  return pool;
}

std::string node_ref(int v) { return "node " + std::to_string(v); }

std::string phrase_for(const Target& t, int tmpl) {
  auto pick = [&](const char* a, const char* b, const char* c) {
    const char* arr[3] = {a, b, c};
    return std::string(arr[tmpl % kNumPhrasings]);
  };
  if (t.kind == "in")
    return pick("What is the in-degree of NODE?",
                "How many incoming edges does NODE have?",
                "Count the directed edges that end at NODE.");
  if (t.kind == "out")
    return pick("What is the out-degree of NODE?",
                "How many outgoing edges does NODE have?",
                "Count the directed edges that start at NODE.");
  if (t.kind == "avg")
    return pick("What is the average degree of this graph? Round to two decimals.",
                "Compute the graph's average degree, rounded to two decimals.",
                "Report the average degree of the graph to two decimal places.");
  if (t.kind == "pred")
    return pick("List the in-neighbors (predecessors) of NODE.",
                "Which nodes have an edge pointing to NODE?",
                "Give the set of direct predecessors of NODE.");
  if (t.kind == "succ")
    return pick("List the out-neighbors (successors) of NODE.",
                "Which nodes does NODE point to directly?",
                "Give the set of direct successors of NODE.");
  if (t.kind == "prompt")
    return pick("What is the raw prompt of NODE?",
                "Return the exact prompt text assigned to NODE.",
                "Quote the prompt of NODE verbatim.");
  if (t.kind == "pair")
    return pick("Is SRC able to reach DST? Answer with the shortest directed path length in edges, or \"unreachable\".",
                "What is the length of the shortest directed path from SRC to DST? Answer \"unreachable\" if no path exists.",
                "Give the shortest path length from SRC to DST counting edges, or \"unreachable\".");
  if (t.kind == "sources")
    return pick("List all source nodes (zero in-degree) of this graph.",
                "Which nodes have no incoming edges?",
                "Identify every node with in-degree zero.");
  if (t.kind == "sinks")
    return pick("List all sink nodes (zero out-degree) of this graph.",
                "Which nodes have no outgoing edges?",
                "Identify every node with out-degree zero.");
  // graph (TSORT)
  return pick("Provide a valid topological ordering of all nodes.",
              "List all nodes in a topological order.",
              "Give an ordering of the nodes such that every edge goes from an earlier node to a later one.");
}

std::string instantiate_phrase(const Target& t, int tmpl) {
  std::string s = phrase_for(t, tmpl);
  auto replace_all = [&](const std::string& from, const std::string& to) {
    for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size()))
      s.replace(p, from.size(), to);
  };
  if (t.kind == "pair") {
    replace_all("SRC", node_ref(t.a));
    replace_all("DST", node_ref(t.b));
  } else if (t.a >= 0) {
    replace_all("NODE", node_ref(t.a));
  }
  return s;
}

nlohmann::json id_set_json(const std::set<int>& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (int v : s) arr.push_back(v);
  return arr;
}

nlohmann::json gold_for(const AgentWorkflow& w, const Target& t) {
  if (t.kind == "in") return oracle_degrees(w, t.a).in_degree;
  if (t.kind == "out") return oracle_degrees(w, t.a).out_degree;
  if (t.kind == "avg") return oracle_average_degree(w);
  if (t.kind == "pred") return id_set_json(oracle_neighbors(w, t.a).in_neighbors);
  if (t.kind == "succ") return id_set_json(oracle_neighbors(w, t.a).out_neighbors);
  if (t.kind == "prompt") return oracle_prompt(w, t.a);
  if (t.kind == "pair") {
    auto r = oracle_reachability(w, t.a, t.b);
    if (!r.reachable) return "unreachable";
    return r.shortest_length;
  }
  if (t.kind == "sources") return id_set_json(oracle_key_nodes(w).sources);
  if (t.kind == "sinks") return id_set_json(oracle_key_nodes(w).sinks);
  return nlohmann::json(oracle_toposort(w));
}

std::string format_real2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string id_list_text(const nlohmann::json& arr) {
  std::string out = "[";
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(arr[i].get<int>());
  }
  return out + "]";
}

}  // namespace

std::string render_canonical_answer(const GraphQAItem& item) {
  const auto& g = item.gold_answer;
  if (g.is_string()) return g.get<std::string>();
  if (g.is_number_integer()) return std::to_string(g.get<long long>());
  if (g.is_number_float()) return format_real2(g.get<double>());
  if (g.is_array()) return id_list_text(g);
  throw Error("item '" + item.item_id + "' has unrenderable gold answer");
}

QaCorpus generate_qa_dataset(const std::vector<AgentWorkflow>& workflows,
                             int samples_per_type, std::uint64_t seed) {
  if (samples_per_type < 1) throw Error("samples_per_type must be >= 1");
  QaCorpus corpus;
  for (const auto& w : workflows) {
    auto report = validate_workflow(w);
    if (!report.ok())
      throw Error("workflow '" + w.workflow_id + "' invalid: " + report.errors.front().message);
    const std::string serialized = serialize_workflow(w).text;
    for (auto type : kQaTaskTypes) {
      auto pool = target_pool(w, type);
      std::mt19937_64 rng(derive_seed(seed, "qa/" + to_string(type) + "/" + w.workflow_id));
      std::shuffle(pool.begin(), pool.end(), rng);
      const int shift = static_cast<int>(rng() % kNumPhrasings);
      const int capacity = static_cast<int>(pool.size()) * kNumPhrasings;
      if (capacity < samples_per_type)
        corpus.warnings.push_back("workflow '" + w.workflow_id + "': only " +
                                  std::to_string(capacity) + " distinct " + to_string(type) +
                                  " items available (requested " +
                                  std::to_string(samples_per_type) + ")");
      const int emit = std::min(samples_per_type, capacity);
      for (int k = 0; k < emit; ++k) {
        const Target& target = pool[k % pool.size()];
        const int round = k / static_cast<int>(pool.size());
        const int tmpl = (shift + round) % kNumPhrasings;
        GraphQAItem item;
        item.item_id = w.workflow_id + "/" + to_string(type) + "/" + std::to_string(k);
        item.workflow_id = w.workflow_id;
        item.task_type = type;
        item.question = serialized + "\n\n" + instantiate_phrase(target, tmpl);
        item.gold_answer = gold_for(w, target);
        corpus.items.push_back(std::move(item));
      }
    }
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Grading

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Pull out numeric tokens; a '-' is a sign only when not preceded by a digit.
std::vector<double> extract_numbers(const std::string& s) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < s.size()) {
    bool neg = false;
    std::size_t start = i;
    if (s[i] == '-' && (i == 0 || !std::isdigit(static_cast<unsigned char>(s[i - 1])))) {
      neg = true;
      start = i + 1;
    }
    std::size_t j = start;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) j++;
    if (j > start) {
      std::size_t k = j;
      if (k < s.size() && s[k] == '.') {
        std::size_t m = k + 1;
        while (m < s.size() && std::isdigit(static_cast<unsigned char>(s[m]))) m++;
        if (m > k + 1) k = m;
      }
      double v = std::stod(s.substr(start, k - start));
      out.push_back(neg ? -v : v);
      i = k;
    } else {
      i++;
    }
  }
  return out;
}

std::vector<int> extract_ints(const std::string& s) {
  std::vector<int> out;
  for (double v : extract_numbers(s)) out.push_back(static_cast<int>(std::llround(v)));
  return out;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

AgentWorkflow workflow_from_question(const GraphQAItem& item) {
  const std::string marker = "\n" + std::string(kTemplateInstruction);
  std::size_t pos = item.question.find(marker);
  if (pos == std::string::npos)
    throw Error("item '" + item.item_id + "': question does not embed a serialized workflow");
  return parse_serialized(item.question.substr(0, pos + marker.size()));
}

// verdict: "" means correct
std::string judge(const GraphQAItem& item, const std::string& answer) {
  const auto& gold = item.gold_answer;
  switch (item.task_type) {
    case QaTaskType::DBP: {
      auto nums = extract_numbers(answer);
      if (nums.empty()) return "unparseable";
      return round2(nums.front()) == round2(gold.get<double>()) ? "" : "wrong";
    }
    case QaTaskType::DNE:
    case QaTaskType::KNI: {
      auto ints = extract_ints(answer);
      std::set<int> got(ints.begin(), ints.end());
      std::set<int> want;
      for (const auto& v : gold) want.insert(v.get<int>());
      return got == want ? "" : "wrong";
    }
    case QaTaskType::NPR:
      return trim(answer) == trim(gold.get<std::string>()) ? "" : "wrong";
    case QaTaskType::REACH: {
      if (gold.is_string()) return lower(trim(answer)) == "unreachable" ? "" : "wrong";
      if (lower(trim(answer)) == "unreachable") return "wrong";
      auto nums = extract_numbers(answer);
      if (nums.empty()) return "unparseable";
      return std::llround(nums.front()) == gold.get<long long>() ? "" : "wrong";
    }
    case QaTaskType::TSORT: {
      auto ordering = extract_ints(answer);
      AgentWorkflow w = workflow_from_question(item);
      if (ordering.empty() && !w.nodes.empty()) return "unparseable";
      return is_valid_toposort(w, ordering).valid ? "" : "wrong";
    }
  }
  return "wrong";
}

}  // namespace

GradingReport grade_answers(const std::vector<GraphQAItem>& items,
                            const std::map<std::string, std::string>& answers) {
  GradingReport report;
  std::map<QaTaskType, std::pair<long, long>> tallies;  // correct, total
  for (const auto& item : items) {
    ItemVerdict v;
    v.item_id = item.item_id;
    v.task_type = item.task_type;
    auto it = answers.find(item.item_id);
    if (it == answers.end()) {
      v.verdict = "missing";
    } else {
      std::string verdict = judge(item, it->second);
      v.correct = verdict.empty();
      v.verdict = v.correct ? "correct" : verdict;
    }
    auto& [correct, total] = tallies[item.task_type];
    total++;
    if (v.correct) correct++;
    report.verdicts.push_back(std::move(v));
  }
  double sum = 0.0;
  for (const auto& [type, tally] : tallies) {
    double acc = tally.second ? static_cast<double>(tally.first) / tally.second : 0.0;
    report.per_type_accuracy[type] = acc;
    sum += acc;
  }
  report.average = tallies.empty() ? 0.0 : sum / static_cast<double>(tallies.size());
  return report;
}

std::string grading_report_to_json(const GradingReport& report) {
  nlohmann::ordered_json j;
  for (auto type : kQaTaskTypes) {
    auto it = report.per_type_accuracy.find(type);
    if (it != report.per_type_accuracy.end()) j[to_string(type)] = round2(it->second * 100.0);
  }
  j["Average"] = round2(report.average * 100.0);
  nlohmann::ordered_json counts;
  long correct = 0;
  for (const auto& v : report.verdicts) correct += v.correct ? 1 : 0;
  j["items_total"] = report.verdicts.size();
  j["items_correct"] = correct;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Persistence

void write_qa_jsonl(const std::vector<GraphQAItem>& items, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write QA corpus " + path.string());
  for (const auto& item : items) {
    nlohmann::ordered_json j;
    j["item_id"] = item.item_id;
    j["workflow_id"] = item.workflow_id;
    j["task_type"] = to_string(item.task_type);
    j["question"] = item.question;
    j["gold_answer"] = item.gold_answer;
    out << j.dump() << '\n';
  }
}

std::vector<GraphQAItem> read_qa_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open QA corpus " + path.string());
  std::vector<GraphQAItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      GraphQAItem item;
      item.item_id = j.at("item_id").get<std::string>();
      item.workflow_id = j.at("workflow_id").get<std::string>();
      item.task_type = qa_task_type_from_string(j.at("task_type").get<std::string>());
      item.question = j.at("question").get<std::string>();
      item.gold_answer = j.at("gold_answer");
      items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return items;
}

void write_answers_jsonl(const std::map<std::string, std::string>& answers,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write answers " + path.string());
  for (const auto& [id, text] : answers) {
    nlohmann::ordered_json j;
    j["item_id"] = id;
    j["answer"] = text;
    out << j.dump() << '\n';
  }
}

std::map<std::string, std::string> read_answers_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open answers " + path.string());
  std::map<std::string, std::string> answers;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      answers[j.at("item_id").get<std::string>()] = j.at("answer").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return answers;
}

nlohmann::json qa_corpus_metadata(int samples_per_type, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["template_version"] = kTemplateVersion;
  j["samples_per_type"] = samples_per_type;
  j["seed"] = seed;
  j["task_types"] = {"DBP", "DNE", "NPR", "REACH", "KNI", "TSORT"};
  j["phrasings_per_type"] = kNumPhrasings;
  j["conventions"] = {
      {"average_degree", "2*|E|/|V| rounded to 2 decimals"},
      {"unreachable_token", "unreachable"},
      {"id_sets", "ascending node ids, e.g. [0, 2]"},
      {"tsort_gold", "Kahn order with smallest-id tie-break; grading accepts any valid order"},
      {"reals", "two decimals"},
  };
  return j;
}

}  // namespace glow
