#include "graphtoken/tasks.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "graphtoken/rng.hpp"

namespace graphtoken {

namespace {

struct TaskInfo {
  TaskKind kind;
  const char* name;
  TaskLevel level;
  int arity;
  PropertyKind property;
};

constexpr TaskInfo kTaskInfo[] = {
    {TaskKind::node_count, "node_count", TaskLevel::graph, 0, PropertyKind::node_count},
    {TaskKind::edge_count, "edge_count", TaskLevel::graph, 0, PropertyKind::edge_count},
    {TaskKind::cycle_check, "cycle_check", TaskLevel::graph, 0, PropertyKind::has_cycle},
    {TaskKind::triangle_counting, "triangle_counting", TaskLevel::graph, 0,
     PropertyKind::triangle_count},
    {TaskKind::node_degree, "node_degree", TaskLevel::node, 1, PropertyKind::node_degree},
    {TaskKind::connected_nodes, "connected_nodes", TaskLevel::node, 1,
     PropertyKind::connected_nodes},
    {TaskKind::reachability, "reachability", TaskLevel::edge, 2, PropertyKind::reachable},
    {TaskKind::edge_existence, "edge_existence", TaskLevel::edge, 2,
     PropertyKind::edge_exists},
    {TaskKind::shortest_path, "shortest_path", TaskLevel::edge, 2,
     PropertyKind::shortest_path_len},
};

const TaskInfo& info(TaskKind kind) {
  for (const auto& t : kTaskInfo) {
    if (t.kind == kind) return t;
  }
  throw std::invalid_argument("unknown task kind");
}

}  // namespace

const char* task_name(TaskKind kind) { return info(kind).name; }

TaskKind task_from_name(const std::string& name) {
  for (const auto& t : kTaskInfo) {
    if (name == t.name) return t.kind;
  }
  throw std::invalid_argument("unknown task kind: " + name);
}

TaskLevel task_level(TaskKind kind) { return info(kind).level; }
int task_arity(TaskKind kind) { return info(kind).arity; }
PropertyKind task_property(TaskKind kind) { return info(kind).property; }

std::string make_question(TaskKind kind, const std::vector<int>& node_args) {
  if (static_cast<int>(node_args.size()) != task_arity(kind)) {
    throw std::invalid_argument("node argument count does not match task arity");
  }
  switch (kind) {
    case TaskKind::node_count: return "how many nodes are in this graph ?";
    case TaskKind::edge_count: return "how many edges are in this graph ?";
    case TaskKind::cycle_check: return "does this graph contain a cycle ?";
    case TaskKind::triangle_counting: return "how many triangles are in this graph ?";
    case TaskKind::node_degree:
      return "what is the degree of node " + std::to_string(node_args[0]) + " ?";
    case TaskKind::connected_nodes:
      return "which nodes are connected to node " + std::to_string(node_args[0]) + " ?";
    case TaskKind::reachability:
      return "is there a path from node " + std::to_string(node_args[0]) + " to node " +
             std::to_string(node_args[1]) + " ?";
    case TaskKind::edge_existence:
      return "is there an edge between node " + std::to_string(node_args[0]) +
             " and node " + std::to_string(node_args[1]) + " ?";
    case TaskKind::shortest_path:
      return "what is the length of the shortest path from node " +
             std::to_string(node_args[0]) + " to node " + std::to_string(node_args[1]) +
             " ?";
  }
  throw std::invalid_argument("unknown task kind");
}

std::string render_answer(TaskKind kind, const PropertyValue& value) {
  (void)kind;
  if (std::holds_alternative<bool>(value)) return std::get<bool>(value) ? "yes" : "no";
  if (std::holds_alternative<std::int64_t>(value)) {
    return std::to_string(std::get<std::int64_t>(value));
  }
  if (std::holds_alternative<std::vector<int>>(value)) {
    const auto& nodes = std::get<std::vector<int>>(value);
    if (nodes.empty()) return "none";
    std::vector<int> sorted = nodes;
    std::sort(sorted.begin(), sorted.end());
    std::string out;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (i > 0) out += " , ";
      out += std::to_string(sorted[i]);
    }
    return out;
  }
  throw std::invalid_argument("task answers must be boolean, integer or node set");
}

std::optional<PropertyValue> parse_answer(TaskKind kind, const std::string& text) {
  auto parse_int = [](const std::string& word) -> std::optional<std::int64_t> {
    if (word.empty() || word.size() > 9) return std::nullopt;
    std::int64_t value = 0;
    for (char c : word) {
      if (c < '0' || c > '9') return std::nullopt;
      value = value * 10 + (c - '0');
    }
    return value;
  };
  switch (task_property(kind)) {
    case PropertyKind::has_cycle:
    case PropertyKind::reachable:
    case PropertyKind::edge_exists: {
      if (text == "yes") return PropertyValue(true);
      if (text == "no") return PropertyValue(false);
      return std::nullopt;
    }
    case PropertyKind::connected_nodes: {
      if (text == "none") return PropertyValue(std::vector<int>{});
      std::vector<int> nodes;
      std::istringstream is(text);
      std::string word;
      bool expect_number = true;
      while (is >> word) {
        if (expect_number) {
          auto v = parse_int(word);
          if (!v) return std::nullopt;
          nodes.push_back(static_cast<int>(*v));
        } else if (word != ",") {
          return std::nullopt;
        }
        expect_number = !expect_number;
      }
      if (expect_number || nodes.empty()) return std::nullopt;  // trailing comma or empty
      return PropertyValue(nodes);
    }
    default: {
      auto v = parse_int(text);
      if (!v) return std::nullopt;
      return PropertyValue(*v);
    }
  }
}

std::string serialize_graph_text(const Graph& g) {
  if (g.edge_count() == 0) return "edges : none .";
  std::string out = "edges :";
  bool first = true;
  for (auto [u, v] : g.edges()) {
    if (!first) out += " ,";
    out += " " + std::to_string(u) + " - " + std::to_string(v);
    first = false;
  }
  return out + " .";
}

void DatasetConfig::validate() const {
  if (n_train < 1 || n_test < 1) throw std::invalid_argument("split sizes must be >= 1");
  if (max_retries < 1) throw std::invalid_argument("retry cap must be >= 1");
  gen.validate();
}

namespace {

// Second, structurally independent verification pass: rebuild the graph from
// its serialized line, recompute the property, and round-trip the answer.
void verify_instance(const TaskInstance& inst) {
  Graph rebuilt = parse_graph_line(format_graph_line(inst.graph));
  PropertyValue again = evaluate_property(rebuilt, task_property(inst.kind), inst.node_args);
  if (render_answer(inst.kind, again) != inst.answer) {
    throw std::logic_error("answer re-verification failed");
  }
  auto parsed = parse_answer(inst.kind, inst.answer);
  if (!parsed || render_answer(inst.kind, *parsed) != inst.answer) {
    throw std::logic_error("answer round-trip failed");
  }
}

TaskInstance sample_instance(TaskKind kind, const DatasetConfig& cfg, Rng& rng,
                             const std::set<std::string>& excluded_graphs,
                             std::set<std::string>* seen_graphs) {
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    Graph g = sample_random_graph(cfg.gen, rng);
    std::string line = format_graph_line(g);
    if (excluded_graphs.count(line)) continue;
    int n = g.node_count();

    std::vector<int> args;
    if (task_arity(kind) == 1) {
      args = {static_cast<int>(rng.uniform_int(0, n - 1))};
    } else if (task_arity(kind) == 2) {
      if (n < 2) continue;
      auto draw_pair = [&]() {
        int u = static_cast<int>(rng.uniform_int(0, n - 1));
        int v = static_cast<int>(rng.uniform_int(0, n - 2));
        if (v >= u) ++v;
        return std::vector<int>{u, v};
      };
      if (kind == TaskKind::shortest_path ||
          (kind == TaskKind::reachability && rng.bernoulli(0.5))) {
        // rejection: endpoints must be reachable
        bool found = false;
        for (int tries = 0; tries < cfg.max_retries; ++tries) {
          args = draw_pair();
          if (std::get<bool>(evaluate_property(g, PropertyKind::reachable, args))) {
            found = true;
            break;
          }
        }
        if (!found) continue;  // resample the graph
      } else {
        args = draw_pair();
      }
    }

    TaskInstance inst;
    inst.graph = g;
    inst.kind = kind;
    inst.node_args = args;
    inst.question = make_question(kind, args);
    inst.answer = render_answer(kind, evaluate_property(g, task_property(kind), args));
    verify_instance(inst);
    if (seen_graphs) seen_graphs->insert(line);
    return inst;
  }
  throw std::runtime_error(std::string("could not sample a valid instance for ") +
                           task_name(kind));
}

}  // namespace

Dataset build_dataset(TaskKind kind, const DatasetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Dataset out;
  std::set<std::string> train_graphs;
  Rng train_rng = Rng::derive(seed, std::string("dataset/") + task_name(kind) + "/train");
  for (int i = 0; i < cfg.n_train; ++i) {
    TaskInstance inst = sample_instance(kind, cfg, train_rng, {}, &train_graphs);
    inst.split = "train";
    out.train.push_back(std::move(inst));
  }
  Rng test_rng = Rng::derive(seed, std::string("dataset/") + task_name(kind) + "/test");
  for (int i = 0; i < cfg.n_test; ++i) {
    TaskInstance inst = sample_instance(kind, cfg, test_rng, train_graphs, nullptr);
    inst.split = "test";
    out.test.push_back(std::move(inst));
  }
  return out;
}

double score(const std::vector<std::string>& predictions,
             const std::vector<TaskInstance>& instances) {
  if (predictions.size() != instances.size()) {
    throw std::invalid_argument("prediction/instance count mismatch");
  }
  if (instances.empty()) return 0.0;
  int correct = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const TaskInstance& inst = instances[i];
    if (inst.kind == TaskKind::connected_nodes) {
      auto predicted = parse_answer(inst.kind, predictions[i]);
      auto expected = parse_answer(inst.kind, inst.answer);
      if (predicted && expected) {
        auto a = std::get<std::vector<int>>(*predicted);
        auto b = std::get<std::vector<int>>(*expected);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a == b) ++correct;
      }
    } else if (predictions[i] == inst.answer) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(instances.size());
}

std::string majority_answer(const std::vector<TaskInstance>& instances) {
  std::map<std::string, int> counts;
  for (const auto& inst : instances) ++counts[inst.answer];
  std::string best;
  int best_count = -1;
  for (const auto& [answer, count] : counts) {
    if (count > best_count) {
      best = answer;
      best_count = count;
    }
  }
  return best;
}

double majority_rate(const std::vector<TaskInstance>& instances) {
  if (instances.empty()) return 0.0;
  const std::string best = majority_answer(instances);
  int count = 0;
  for (const auto& inst : instances) {
    if (inst.answer == best) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(instances.size());
}

std::vector<std::string> template_vocabulary() {
  std::set<std::string> words{"yes", "no", "none", ",", "."};
  for (TaskKind kind : kAllTasks) {
    std::vector<int> args(static_cast<std::size_t>(task_arity(kind)), 0);
    std::istringstream is(make_question(kind, args));
    std::string word;
    while (is >> word) words.insert(word);
  }
  // words from the text-serialization pathway
  std::istringstream is(serialize_graph_text(Graph(2, {{0, 1}})));
  std::string word;
  while (is >> word) words.insert(word);
  return {words.begin(), words.end()};
}

namespace {

nlohmann::ordered_json instance_to_json(const TaskInstance& inst) {
  nlohmann::ordered_json j;
  j["n"] = inst.graph.node_count();
  auto edges = nlohmann::ordered_json::array();
  for (auto [u, v] : inst.graph.edges()) edges.push_back({u, v});
  j["edges"] = std::move(edges);
  j["task"] = task_name(inst.kind);
  j["args"] = inst.node_args;
  j["question"] = inst.question;
  j["answer"] = inst.answer;
  j["split"] = inst.split;
  return j;
}

TaskInstance instance_from_json(const nlohmann::ordered_json& j) {
  TaskInstance inst;
  Graph g(j.at("n").get<int>());
  for (const auto& e : j.at("edges")) g.add_edge(e.at(0).get<int>(), e.at(1).get<int>());
  inst.graph = std::move(g);
  inst.kind = task_from_name(j.at("task").get<std::string>());
  inst.node_args = j.at("args").get<std::vector<int>>();
  inst.question = j.at("question").get<std::string>();
  inst.answer = j.at("answer").get<std::string>();
  inst.split = j.at("split").get<std::string>();
  return inst;
}

}  // namespace

void write_dataset_jsonl(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& inst : dataset.train) out << instance_to_json(inst).dump() << '\n';
  for (const auto& inst : dataset.test) out << instance_to_json(inst).dump() << '\n';
}

Dataset read_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  Dataset out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TaskInstance inst = instance_from_json(nlohmann::ordered_json::parse(line));
    (inst.split == "train" ? out.train : out.test).push_back(std::move(inst));
  }
  return out;
}

}  // namespace graphtoken
