#include "glow/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <set>

#include "glow/error.hpp"
#include "glow/graph_qa.hpp"
#include "glow/seed.hpp"
#include "glow/textualize.hpp"

namespace glow {

const std::vector<std::string>& default_prompt_pool() {
  static const std::vector<std::string> kPool = {
      "generate code for the subtask", "review changes from earlier steps",
      "test the program against the specification", "merge results into one answer",
      "plan the approach step by step", "analyze requirements and constraints",
      "summarize findings for the user", "debug errors reported upstream"};
  return kPool;
}

namespace {

const std::vector<std::string>& pool_of(const SyntheticSpaceConfig& space) {
  return space.prompt_pool.empty() ? default_prompt_pool() : space.prompt_pool;
}

std::string hex_id(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "aw-%012llx",
                static_cast<unsigned long long>(seed & 0xffffffffffffull));
  return buf;
}

std::string lower_copy(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool prompt_has(const AgentNode& n, const std::string& keyword) {
  return lower_copy(n.prompt).find(lower_copy(keyword)) != std::string::npos;
}

std::vector<int> nodes_with_keyword(const AgentWorkflow& w, const std::string& keyword) {
  std::vector<int> out;
  for (const auto& n : w.nodes)
    if (prompt_has(n, keyword)) out.push_back(n.id);
  return out;
}

}  // namespace

AgentWorkflow sample_workflow(const SyntheticSpaceConfig& space, std::uint64_t seed) {
  if (space.min_nodes < 1 || space.max_nodes < space.min_nodes)
    throw ConfigError("synthetic space: bad node-count range");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_pick(space.min_nodes, space.max_nodes);
  std::uniform_real_distribution<double> density_pick(space.min_edge_density,
                                                      space.max_edge_density);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const auto& pool = pool_of(space);
  std::uniform_int_distribution<std::size_t> prompt_pick(0, pool.size() - 1);

  AgentWorkflow w;
  w.workflow_id = hex_id(seed);
  const int n = n_pick(rng);
  const double density = density_pick(rng);
  for (int i = 0; i < n; ++i) w.nodes.push_back({i, pool[prompt_pick(rng)]});
  // random topological order; forward pairs keep the graph acyclic
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng) < density) w.edges.push_back({order[i], order[j]});
  return w;
}

MutationResult mutate_workflow(const AgentWorkflow& w, const SyntheticSpaceConfig& space,
                               std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "mutate"));
  const auto& pool = pool_of(space);

  // legal add-edge candidates: absent, non-self, acyclicity-preserving
  std::vector<Edge> addable;
  {
    std::set<std::pair<int, int>> existing;
    for (const auto& e : w.edges) existing.insert({e.source, e.target});
    for (const auto& u : w.nodes)
      for (const auto& v : w.nodes) {
        if (u.id == v.id || existing.count({u.id, v.id})) continue;
        if (!oracle_reachability(w, v.id, u.id).reachable) addable.push_back({u.id, v.id});
      }
  }

  std::vector<std::string> kinds;
  if (!addable.empty()) kinds.push_back("add-edge");
  if (!w.edges.empty()) kinds.push_back("remove-edge");
  if (static_cast<int>(w.nodes.size()) < space.max_nodes) kinds.push_back("add-node");
  if (!w.nodes.empty() && pool.size() > 1) kinds.push_back("swap-prompt");
  if (kinds.empty()) return {w, false, "none"};

  std::uniform_int_distribution<std::size_t> kind_pick(0, kinds.size() - 1);
  const std::string kind = kinds[kind_pick(rng)];
  AgentWorkflow out = w;

  if (kind == "add-edge") {
    std::uniform_int_distribution<std::size_t> pick(0, addable.size() - 1);
    out.edges.push_back(addable[pick(rng)]);
  } else if (kind == "remove-edge") {
    std::uniform_int_distribution<std::size_t> pick(0, w.edges.size() - 1);
    out.edges.erase(out.edges.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
  } else if (kind == "add-node") {
    int new_id = 0;
    for (const auto& n : w.nodes) new_id = std::max(new_id, n.id + 1);
    std::uniform_int_distribution<std::size_t> prompt_pick(0, pool.size() - 1);
    out.nodes.push_back({new_id, pool[prompt_pick(rng)]});
    // attach with one edge; a fresh node cannot create a cycle
    std::uniform_int_distribution<std::size_t> node_pick(0, w.nodes.size() - 1);
    int other = w.nodes[node_pick(rng)].id;
    if (rng() & 1)
      out.edges.push_back({other, new_id});
    else
      out.edges.push_back({new_id, other});
  } else {  // swap-prompt
    std::uniform_int_distribution<std::size_t> node_pick(0, w.nodes.size() - 1);
    auto& node = out.nodes[node_pick(rng)];
    std::uniform_int_distribution<std::size_t> prompt_pick(0, pool.size() - 2);
    std::size_t p = prompt_pick(rng);
    if (pool[p] == node.prompt) p = pool.size() - 1;
    node.prompt = pool[p];
  }
  return {std::move(out), true, kind};
}

bool rule_satisfied(const TaskRule& rule, const AgentWorkflow& w) {
  for (const auto& kw : rule.require_keywords)
    if (nodes_with_keyword(w, kw).empty()) return false;

  auto path_holds = [&](const PathCondition& cond) {
    auto froms = nodes_with_keyword(w, cond.from_keyword);
    auto tos = nodes_with_keyword(w, cond.to_keyword);
    for (int u : froms)
      for (int v : tos) {
        if (u == v) continue;
        if (cond.direct_only) {
          for (const auto& e : w.edges)
            if (e.source == u && e.target == v) return true;
        } else if (oracle_reachability(w, u, v).reachable) {
          return true;
        }
      }
    return false;
  };
  for (const auto& cond : rule.require_paths)
    if (!path_holds(cond)) return false;
  for (const auto& cond : rule.forbid_paths)
    if (path_holds(cond)) return false;

  if (rule.min_longest_path >= 0 || rule.max_longest_path >= 0) {
    int depth = longest_path_length(w);
    if (rule.min_longest_path >= 0 && depth < rule.min_longest_path) return false;
    if (rule.max_longest_path >= 0 && depth > rule.max_longest_path) return false;
  }
  return true;
}

int ground_truth_oracle(const OracleSpec& spec, const AgentWorkflow& w,
                        const TaskInstruction& task, std::uint64_t seed, CostLedger* ledger) {
  if (spec.noise_rate < 0.0 || spec.noise_rate >= 0.5)
    throw ConfigError("oracle noise rate must lie in [0, 0.5)");
  auto it = spec.rules.find(task.task_id);
  if (it == spec.rules.end()) throw NotFoundError("oracle has no rule for task '" + task.task_id + "'");
  if (ledger) {
    ledger->oracle_calls++;
    ledger->oracle_cost += spec.cost_per_call;
  }
  int label = rule_satisfied(it->second, w) ? 1 : 0;
  if (spec.noise_rate > 0.0) {
    std::uint64_t h = derive_seed(seed, serialize_workflow(w).text + "\x1f" + task.task_id);
    double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // uniform in [0,1)
    if (u < spec.noise_rate) label = 1 - label;
  }
  return label;
}

double true_rule_score(const OracleSpec& spec, const AgentWorkflow& w,
                       const std::vector<TaskInstruction>& tasks) {
  if (tasks.empty()) throw Error("true_rule_score: no tasks");
  double acc = 0.0;
  for (const auto& task : tasks) {
    auto it = spec.rules.find(task.task_id);
    if (it == spec.rules.end())
      throw NotFoundError("oracle has no rule for task '" + task.task_id + "'");
    acc += rule_satisfied(it->second, w) ? 1.0 : 0.0;
  }
  return acc / static_cast<double>(tasks.size());
}

// ---------------------------------------------------------------------------

namespace {

std::string first_word(const std::string& role) {
  auto sp = role.find(' ');
  return sp == std::string::npos ? role : role.substr(0, sp);
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticCorpusConfig& config) {
  if (config.n_workflows < 10) throw ConfigError("synthetic corpus: need >= 10 workflows");
  if (config.n_tasks < 1) throw ConfigError("synthetic corpus: need >= 1 task");
  const auto& pool = pool_of(config.space);
  std::vector<std::string> keywords;
  for (const auto& role : pool) keywords.push_back(first_word(role));

  SyntheticCorpus corpus;
  corpus.oracle.noise_rate = config.label_noise;

  // task pool: cycle through the four rule families, never reusing an
  // unordered keyword pair
  std::mt19937_64 task_rng(derive_seed(config.seed, "task-pool"));
  std::set<std::pair<std::string, std::string>> used_pairs;
  auto next_pair = [&]() {
    std::uniform_int_distribution<std::size_t> pick(0, keywords.size() - 1);
    for (int tries = 0; tries < 1000; ++tries) {
      std::size_t a = pick(task_rng), b = pick(task_rng);
      if (a == b) continue;
      auto key = std::minmax(keywords[a], keywords[b]);
      if (used_pairs.insert(key).second) return std::make_pair(keywords[a], keywords[b]);
    }
    throw Error("synthetic corpus: keyword pool too small for the task count");
  };

  for (int i = 0; i < config.n_tasks; ++i) {
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "task-%02d", i);
    TaskInstruction task;
    task.task_id = idbuf;
    TaskRule rule;
    switch (i % 4) {
      case 0: {
        const auto& kw = keywords[static_cast<std::size_t>(i / 4) % keywords.size()];
        task.text = "Complete the assignment with a workflow that includes a " + kw + " step.";
        rule.require_keywords = {kw};
        break;
      }
      case 1: {
        if (i % 8 == 1) {
          task.text = "Complete the assignment with a pipeline at least three stages deep.";
          rule.min_longest_path = 3;
        } else {
          task.text = "Complete the assignment with a shallow pipeline of depth at most two.";
          rule.max_longest_path = 2;
        }
        break;
      }
      case 2: {
        auto [a, b] = next_pair();
        task.text = "Complete the assignment; the " + a + " step must feed directly into the " +
                    b + " step.";
        rule.require_paths = {{a, b, /*direct_only=*/true}};
        break;
      }
      default: {
        auto [a, b] = next_pair();
        task.text = "Complete the assignment; the " + a + " step must eventually lead to the " +
                    b + " step.";
        rule.require_paths = {{a, b, /*direct_only=*/false}};
        break;
      }
    }
    corpus.oracle.rules[task.task_id] = rule;
    corpus.tasks.push_back(task);
  }

  // depth tasks repeat their wording; disambiguate duplicated texts
  std::map<std::string, int> text_seen;
  for (auto& task : corpus.tasks) {
    int n = text_seen[task.text]++;
    if (n > 0) task.text += " (variant " + std::to_string(n) + ")";
  }

  std::vector<AgentWorkflow> workflows;
  for (int i = 0; i < config.n_workflows; ++i)
    workflows.push_back(
        sample_workflow(config.space, derive_seed(config.seed, "workflow", static_cast<std::uint64_t>(i))));

  std::vector<LabeledSample> all;
  std::uint64_t label_seed = derive_seed(config.seed, "labels");
  for (const auto& w : workflows)
    for (const auto& task : corpus.tasks)
      all.push_back({w.workflow_id, task.task_id,
                     ground_truth_oracle(corpus.oracle, w, task, label_seed)});

  std::mt19937_64 split_rng(derive_seed(config.seed, "split"));
  std::shuffle(all.begin(), all.end(), split_rng);
  const std::size_t n = all.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;

  auto build_split = [&](std::size_t lo, std::size_t hi, Split split) {
    LabeledDataset d;
    d.split = split;
    for (std::size_t i = lo; i < hi; ++i) d.samples.push_back(all[i]);
    std::sort(d.samples.begin(), d.samples.end(), [](const auto& a, const auto& b) {
      return std::tie(a.workflow_id, a.task_id) < std::tie(b.workflow_id, b.task_id);
    });
    for (const auto& s : d.samples) {
      if (!d.workflows.count(s.workflow_id)) {
        auto it = std::find_if(workflows.begin(), workflows.end(),
                               [&](const auto& w) { return w.workflow_id == s.workflow_id; });
        d.workflows.emplace(s.workflow_id, *it);
      }
      if (!d.tasks.count(s.task_id)) {
        auto it = std::find_if(corpus.tasks.begin(), corpus.tasks.end(),
                               [&](const auto& t) { return t.task_id == s.task_id; });
        d.tasks.emplace(s.task_id, *it);
      }
    }
    return d;
  };
  corpus.train = build_split(0, n_train, Split::train);
  corpus.validation = build_split(n_train, n_train + n_val, Split::validation);
  corpus.test = build_split(n_train + n_val, n, Split::test);
  return corpus;
}

}  // namespace glow
