#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphtoken/graph.hpp"
#include "graphtoken/properties.hpp"

namespace graphtoken {

enum class TaskKind {
  node_count,
  edge_count,
  cycle_check,
  triangle_counting,
  node_degree,
  connected_nodes,
  reachability,
  edge_existence,
  shortest_path,
};

enum class TaskLevel { graph, node, edge };

constexpr TaskKind kAllTasks[] = {
    TaskKind::node_count,      TaskKind::edge_count,    TaskKind::cycle_check,
    TaskKind::triangle_counting, TaskKind::node_degree, TaskKind::connected_nodes,
    TaskKind::reachability,    TaskKind::edge_existence, TaskKind::shortest_path,
};

const char* task_name(TaskKind kind);
TaskKind task_from_name(const std::string& name);
TaskLevel task_level(TaskKind kind);
int task_arity(TaskKind kind);
PropertyKind task_property(TaskKind kind);

struct TaskInstance {
  Graph graph;
  TaskKind kind = TaskKind::node_count;
  std::vector<int> node_args;
  std::string question;
  std::string answer;  // canonical text
  std::string split;   // "train" or "test"
};

// Fixed lower-case space-separated template per kind.
std::string make_question(TaskKind kind, const std::vector<int>& node_args);
// yes/no for booleans, decimal for integers, "a , b , c" sorted for node
// sets ("none" when empty).
std::string render_answer(TaskKind kind, const PropertyValue& value);
// Inverse of render_answer; nullopt on unparseable text (never throws on
// malformed model output).
std::optional<PropertyValue> parse_answer(TaskKind kind, const std::string& text);

// Incidence-list sentence: "edges : 0 - 1 , 1 - 2 ." ("edges : none ." when
// the graph has no edges).
std::string serialize_graph_text(const Graph& g);

struct DatasetConfig {
  int n_train = 1000;
  int n_test = 500;
  GraphGenConfig gen;
  int max_retries = 200;  // per-instance resampling cap

  void validate() const;
};

struct Dataset {
  std::vector<TaskInstance> train;
  std::vector<TaskInstance> test;
};

// Seeded, disjoint splits (no labeled graph appears in both); node arguments
// uniform among valid choices, reachability endpoints drawn with at least
// half reachable pairs by rejection, shortest-path endpoints always
// reachable. Throws std::runtime_error when resampling hits the retry cap.
Dataset build_dataset(TaskKind kind, const DatasetConfig& cfg, std::uint64_t seed);

// Exact canonical-match accuracy; connected_nodes compares as node sets.
double score(const std::vector<std::string>& predictions,
             const std::vector<TaskInstance>& instances);

// Most frequent answer string (ties break lexicographically) and its rate.
std::string majority_answer(const std::vector<TaskInstance>& instances);
double majority_rate(const std::vector<TaskInstance>& instances);

// Every word the task templates and answers can emit; the LM vocabulary is
// built from this.
std::vector<std::string> template_vocabulary();

// JSON-lines with stable field order: n, edges, task, args, question,
// answer, split.
void write_dataset_jsonl(const std::string& path, const Dataset& dataset);
Dataset read_dataset_jsonl(const std::string& path);

}  // namespace graphtoken
