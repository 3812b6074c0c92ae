#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "graphtoken/graph.hpp"
#include "graphtoken/properties.hpp"
#include "oracles.hpp"

using namespace graphtoken;

namespace {

Graph path_graph(int n) {
  Graph g(n);
  for (int v = 0; v + 1 < n; ++v) g.add_edge(v, v + 1);
  return g;
}

Graph complete_graph(int n) {
  Graph g(n);
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) g.add_edge(u, v);
  }
  return g;
}

Graph cycle_graph(int n) {
  Graph g = path_graph(n);
  g.add_edge(0, n - 1);
  return g;
}

// All labeled graphs on n nodes, by edge-subset mask.
Graph graph_from_mask(int n, std::uint64_t mask) {
  Graph g(n);
  int bit = 0;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v, ++bit) {
      if (mask >> bit & 1) g.add_edge(u, v);
    }
  }
  return g;
}

bool values_equal(const PropertyValue& a, const PropertyValue& b) {
  if (a.index() != b.index()) return false;
  if (std::holds_alternative<double>(a)) {
    return std::fabs(std::get<double>(a) - std::get<double>(b)) <= 1e-9;
  }
  return a == b;
}

}  // namespace

TEST_CASE("graph invariants") {
  Graph g(4);
  g.add_edge(2, 0);
  CHECK(g.has_edge(0, 2));
  CHECK(g.has_edge(2, 0));  // undirected
  CHECK(g.edges() == std::vector<std::pair<int, int>>{{0, 2}});
  CHECK_THROWS_AS(g.add_edge(1, 1), std::invalid_argument);
  CHECK_THROWS_AS(g.add_edge(0, 4), std::invalid_argument);
  CHECK_THROWS_AS(g.add_edge(0, 2), std::invalid_argument);
  CHECK_THROWS_AS(Graph(0), std::invalid_argument);
}

TEST_CASE("graph line round trip") {
  Graph g(5, {{0, 1}, {1, 3}, {0, 4}});
  std::string line = format_graph_line(g);
  CHECK(line == "5\t0-1,0-4,1-3");
  CHECK(parse_graph_line(line) == g);
  Graph lone(1);
  CHECK(parse_graph_line(format_graph_line(lone)) == lone);
}

TEST_CASE("random generation respects forced configs") {
  Rng rng(7);
  GraphGenConfig single{1, 1, 0.0, 1.0, };
  Graph g1 = sample_random_graph(single, rng);
  CHECK(g1.node_count() == 1);
  CHECK(g1.edge_count() == 0);

  GraphGenConfig forced{4, 4, 1.0, 1.0};
  Graph k4 = sample_random_graph(forced, rng);
  CHECK(k4.edge_count() == 6);

  GraphGenConfig bad{3, 2, 0.0, 1.0};
  CHECK_THROWS_AS(sample_random_graph(bad, rng), std::invalid_argument);
}

TEST_CASE("random generation is deterministic and hits target density") {
  GraphGenConfig cfg{5, 20, 0.5, 0.5};
  Rng a(123), b(123);
  for (int i = 0; i < 5; ++i) {
    CHECK(sample_random_graph(cfg, a) == sample_random_graph(cfg, b));
  }
  // 10^4 draws: empirical edge density within 3 sigma of p = 0.5.
  Rng rng(99);
  std::int64_t pairs = 0, edges = 0;
  for (int i = 0; i < 10000; ++i) {
    Graph g = sample_random_graph(cfg, rng);
    int n = g.node_count();
    pairs += n * (n - 1) / 2;
    edges += g.edge_count();
  }
  double p_hat = static_cast<double>(edges) / static_cast<double>(pairs);
  double sigma = std::sqrt(0.25 / static_cast<double>(pairs));
  CHECK(std::fabs(p_hat - 0.5) <= 3.0 * sigma);
}

TEST_CASE("spot property values") {
  Graph c3 = cycle_graph(3);
  CHECK(std::get<bool>(evaluate_property(c3, PropertyKind::is_bipartite)) == false);
  Graph k4 = complete_graph(4);
  CHECK(std::get<std::int64_t>(evaluate_property(k4, PropertyKind::triangle_count)) == 4);
  Graph p4 = path_graph(4);
  CHECK(std::get<std::int64_t>(evaluate_property(p4, PropertyKind::diameter)) == 3);
  CHECK(std::get<std::int64_t>(evaluate_property(p4, PropertyKind::max_core_number)) == 1);
  CHECK(std::get<double>(evaluate_property(p4, PropertyKind::avg_local_clustering)) ==
        doctest::Approx(0.0));
  CHECK(std::get<bool>(evaluate_property(complete_graph(5), PropertyKind::is_planar)) == false);
  CHECK(std::get<bool>(evaluate_property(k4, PropertyKind::is_planar)) == true);
}

TEST_CASE("property edge cases and errors") {
  Graph p3 = path_graph(3);
  CHECK_THROWS_AS(evaluate_property(p3, PropertyKind::node_degree, {}), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_property(p3, PropertyKind::node_degree, {7}), std::invalid_argument);

  Graph split(4, {{0, 1}, {2, 3}});
  auto v = evaluate_property(split, PropertyKind::shortest_path_len, {0, 3});
  CHECK(std::holds_alternative<Unreachable>(v));
  CHECK(std::get<bool>(evaluate_property(split, PropertyKind::reachable, {0, 3})) == false);

  Graph big(17);
  CHECK_THROWS_AS(evaluate_property(big, PropertyKind::is_planar), std::invalid_argument);

  auto cn = std::get<std::vector<int>>(
      evaluate_property(p3, PropertyKind::connected_nodes, {1}));
  CHECK(cn == std::vector<int>{0, 2});
}

TEST_CASE("every property matches the naive oracle on all graphs up to n=5") {
  for (int n = 1; n <= 5; ++n) {
    std::uint64_t total = 1ull << (n * (n - 1) / 2);
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      Graph g = graph_from_mask(n, mask);
      for (const PropertyKind kind :
           {PropertyKind::node_count, PropertyKind::edge_count, PropertyKind::has_cycle,
            PropertyKind::triangle_count, PropertyKind::diameter, PropertyKind::max_degree,
            PropertyKind::avg_local_clustering, PropertyKind::max_core_number,
            PropertyKind::avg_shortest_path_len, PropertyKind::is_planar,
            PropertyKind::is_bipartite}) {
        REQUIRE(values_equal(evaluate_property(g, kind), oracles::naive_evaluate(g, kind)));
      }
      for (int u = 0; u < n; ++u) {
        REQUIRE(values_equal(evaluate_property(g, PropertyKind::node_degree, {u}),
                             oracles::naive_evaluate(g, PropertyKind::node_degree, {u})));
        REQUIRE(values_equal(evaluate_property(g, PropertyKind::connected_nodes, {u}),
                             oracles::naive_evaluate(g, PropertyKind::connected_nodes, {u})));
        for (int v = 0; v < n; ++v) {
          for (const PropertyKind kind : {PropertyKind::reachable, PropertyKind::edge_exists,
                                          PropertyKind::shortest_path_len}) {
            REQUIRE(values_equal(evaluate_property(g, kind, {u, v}),
                                 oracles::naive_evaluate(g, kind, {u, v})));
          }
        }
      }
    }
  }
}

TEST_CASE("shortest paths satisfy the triangle inequality on random connected graphs") {
  Rng rng(42);
  GraphGenConfig cfg{5, 12, 0.3, 0.7};
  int tested = 0;
  while (tested < 30) {
    Graph g = sample_random_graph(cfg, rng);
    if (!is_connected(g)) continue;
    ++tested;
    int n = g.node_count();
    std::vector<std::vector<int>> d;
    for (int v = 0; v < n; ++v) d.push_back(bfs_distances(g, v));
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        for (int w = 0; w < n; ++w) {
          REQUIRE(d[u][w] <= d[u][v] + d[v][w]);
        }
      }
    }
  }
}

TEST_CASE("bipartiteness equals no-odd-cycle 2-coloring brute force on n<=6") {
  for (int n = 1; n <= 6; ++n) {
    std::uint64_t total = 1ull << (n * (n - 1) / 2);
    // Sample a strided subset at n=6 to keep runtime small; exhaustive below.
    std::uint64_t stride = n <= 5 ? 1 : 7;
    for (std::uint64_t mask = 0; mask < total; mask += stride) {
      Graph g = graph_from_mask(n, mask);
      REQUIRE(is_bipartite(g) ==
              std::get<bool>(oracles::naive_evaluate(g, PropertyKind::is_bipartite)));
    }
  }
}
