#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "graphtoken/lm.hpp"
#include "graphtoken/tasks.hpp"

using namespace graphtoken;

namespace {

// test-side parser for the text-serialization pathway
Graph parse_graph_text(const std::string& text, int n) {
  Graph g(n);
  std::istringstream is(text);
  std::string word;
  is >> word;  // "edges"
  is >> word;  // ":"
  std::vector<std::string> items;
  while (is >> word) items.push_back(word);
  if (items.size() == 2 && items[0] == "none") return g;
  for (std::size_t i = 0; i + 2 < items.size(); i += 4) {
    g.add_edge(std::stoi(items[i]), std::stoi(items[i + 2]));
  }
  return g;
}

DatasetConfig small_config(int n_train = 40, int n_test = 20) {
  DatasetConfig cfg;
  cfg.n_train = n_train;
  cfg.n_test = n_test;
  cfg.gen = GraphGenConfig{5, 12, 0.1, 0.6};
  return cfg;
}

}  // namespace

TEST_CASE("task metadata") {
  CHECK(task_level(TaskKind::cycle_check) == TaskLevel::graph);
  CHECK(task_level(TaskKind::node_degree) == TaskLevel::node);
  CHECK(task_level(TaskKind::shortest_path) == TaskLevel::edge);
  CHECK(task_arity(TaskKind::node_count) == 0);
  CHECK(task_arity(TaskKind::connected_nodes) == 1);
  CHECK(task_arity(TaskKind::edge_existence) == 2);
  CHECK(task_from_name("triangle_counting") == TaskKind::triangle_counting);
  CHECK_THROWS_AS(task_from_name("nope"), std::invalid_argument);
}

TEST_CASE("question templates and answer rendering") {
  CHECK(make_question(TaskKind::cycle_check, {}) == "does this graph contain a cycle ?");
  CHECK(make_question(TaskKind::node_degree, {5}) == "what is the degree of node 5 ?");
  CHECK(make_question(TaskKind::shortest_path, {0, 5}) ==
        "what is the length of the shortest path from node 0 to node 5 ?");

  CHECK(render_answer(TaskKind::cycle_check, PropertyValue(true)) == "yes");
  CHECK(render_answer(TaskKind::shortest_path, PropertyValue(std::int64_t{3})) == "3");
  CHECK(render_answer(TaskKind::connected_nodes, PropertyValue(std::vector<int>{2, 0})) ==
        "0 , 2");
  CHECK(render_answer(TaskKind::connected_nodes, PropertyValue(std::vector<int>{})) ==
        "none");

  CHECK(std::get<bool>(*parse_answer(TaskKind::cycle_check, "yes")) == true);
  CHECK(std::get<std::vector<int>>(*parse_answer(TaskKind::connected_nodes, "0 , 2")) ==
        std::vector<int>{0, 2});
  CHECK(std::get<std::int64_t>(*parse_answer(TaskKind::shortest_path, "3")) == 3);
  CHECK(!parse_answer(TaskKind::cycle_check, "maybe"));
  CHECK(!parse_answer(TaskKind::node_count, ""));
  CHECK(!parse_answer(TaskKind::node_count, "12 7"));
  CHECK(!parse_answer(TaskKind::connected_nodes, "0 ,"));
}

TEST_CASE("graph text serialization") {
  Graph p2(2, {{0, 1}});
  CHECK(serialize_graph_text(p2) == "edges : 0 - 1 .");
  CHECK(serialize_graph_text(Graph(3)) == "edges : none .");
  Graph g(5, {{0, 1}, {1, 3}, {2, 4}});
  CHECK(parse_graph_text(serialize_graph_text(g), 5) == g);
}

TEST_CASE("dataset generation is deterministic with disjoint splits") {
  DatasetConfig cfg = small_config();
  Dataset a = build_dataset(TaskKind::cycle_check, cfg, 42);
  Dataset b = build_dataset(TaskKind::cycle_check, cfg, 42);
  REQUIRE(a.train.size() == 40);
  REQUIRE(a.test.size() == 20);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].graph == b.train[i].graph);
    CHECK(a.train[i].answer == b.train[i].answer);
  }
  std::set<std::string> train_lines;
  for (const auto& inst : a.train) train_lines.insert(format_graph_line(inst.graph));
  for (const auto& inst : a.test) {
    CHECK(train_lines.count(format_graph_line(inst.graph)) == 0);
  }
}

TEST_CASE("reachability split has at least half reachable pairs; shortest paths finite") {
  DatasetConfig cfg = small_config(120, 60);
  Dataset d = build_dataset(TaskKind::reachability, cfg, 7);
  int reachable = 0;
  for (const auto& inst : d.train) {
    if (inst.answer == "yes") ++reachable;
  }
  CHECK(reachable * 2 >= static_cast<int>(d.train.size()));

  Dataset sp = build_dataset(TaskKind::shortest_path, cfg, 8);
  for (const auto& inst : sp.train) {
    auto parsed = parse_answer(TaskKind::shortest_path, inst.answer);
    REQUIRE(parsed.has_value());
    CHECK(std::get<std::int64_t>(*parsed) >= 1);
  }
}

TEST_CASE("infeasible sampling raises a generation error") {
  DatasetConfig cfg = small_config(4, 2);
  cfg.gen = GraphGenConfig{1, 1, 0.0, 0.0};  // single-node graphs: no edge tasks
  CHECK_THROWS_AS(build_dataset(TaskKind::edge_existence, cfg, 1), std::runtime_error);
}

TEST_CASE("scoring") {
  DatasetConfig cfg = small_config(30, 10);
  Dataset d = build_dataset(TaskKind::connected_nodes, cfg, 9);
  std::vector<std::string> echo;
  for (const auto& inst : d.test) echo.push_back(inst.answer);
  CHECK(score(echo, d.test) == 1.0);

  std::vector<std::string> empty_preds(d.test.size(), "");
  CHECK(score(empty_preds, d.test) == 0.0);

  // node sets compare as sets, not strings
  std::vector<std::string> reordered;
  for (const auto& inst : d.test) {
    auto parsed = parse_answer(TaskKind::connected_nodes, inst.answer);
    auto nodes = std::get<std::vector<int>>(*parsed);
    std::reverse(nodes.begin(), nodes.end());
    std::string text;
    if (nodes.empty()) {
      text = "none";
    } else {
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i) text += " , ";
        text += std::to_string(nodes[i]);
      }
    }
    reordered.push_back(text);
  }
  CHECK(score(reordered, d.test) == 1.0);

  CHECK_THROWS_AS(score({}, d.test), std::invalid_argument);

  // the majority predictor scores exactly the measured majority rate
  Dataset cyc = build_dataset(TaskKind::cycle_check, small_config(100, 50), 10);
  std::vector<std::string> majority(cyc.test.size(), majority_answer(cyc.test));
  CHECK(score(majority, cyc.test) == doctest::Approx(majority_rate(cyc.test)));
}

TEST_CASE("answers round-trip and tokenize across a large generated corpus") {
  Vocab vocab = Vocab::build(template_vocabulary());
  DatasetConfig cfg = small_config(500, 120);
  std::size_t seen = 0;
  for (TaskKind kind : kAllTasks) {
    Dataset d = build_dataset(kind, cfg, 1000 + static_cast<int>(kind));
    for (const auto* split : {&d.train, &d.test}) {
      for (const auto& inst : *split) {
        ++seen;
        auto parsed = parse_answer(kind, inst.answer);
        REQUIRE(parsed.has_value());
        REQUIRE(render_answer(kind, *parsed) == inst.answer);
        // both question and answer stay inside the fixed vocabulary
        REQUIRE(detokenize(vocab, tokenize(vocab, inst.question)) == inst.question);
        REQUIRE(detokenize(vocab, tokenize(vocab, inst.answer)) == inst.answer);
      }
    }
  }
  CHECK(seen >= 5000);
}

TEST_CASE("jsonl round trip is stable") {
  DatasetConfig cfg = small_config(12, 6);
  Dataset d = build_dataset(TaskKind::node_degree, cfg, 77);
  std::string path = "test_tasks_tmp.jsonl";
  write_dataset_jsonl(path, d);
  Dataset back = read_dataset_jsonl(path);
  REQUIRE(back.train.size() == d.train.size());
  REQUIRE(back.test.size() == d.test.size());
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    CHECK(back.train[i].graph == d.train[i].graph);
    CHECK(back.train[i].question == d.train[i].question);
    CHECK(back.train[i].answer == d.train[i].answer);
    CHECK(back.train[i].node_args == d.train[i].node_args);
  }
  // two writes are byte-identical
  std::string path2 = "test_tasks_tmp2.jsonl";
  write_dataset_jsonl(path2, d);
  std::ifstream f1(path), f2(path2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}
