#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "graphtoken/rng.hpp"

namespace graphtoken {

// Undirected simple graph on nodes 0..n-1. Edges are stored as (u, v) with
// u < v, sorted lexicographically; no self-loops, no duplicates.
class Graph {
 public:
  Graph() = default;
  explicit Graph(int n);
  Graph(int n, const std::vector<std::pair<int, int>>& edges);

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  // Throws std::invalid_argument on self-loops, out-of-range endpoints,
  // or duplicate edges.
  void add_edge(int u, int v);

  bool has_edge(int u, int v) const;
  int degree(int v) const;
  const std::vector<int>& neighbors(int v) const;
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  // Neighbor bitmasks, valid for n <= 64.
  std::vector<std::uint64_t> adjacency_masks() const;

  bool operator==(const Graph& other) const {
    return n_ == other.n_ && edges_ == other.edges_;
  }

 private:
  void check_node(int v) const;

  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;    // sorted, u < v
  std::vector<std::vector<int>> adj_;         // sorted neighbor lists
};

// Relabels g by perm: node v becomes perm[v]. perm must be a permutation
// of 0..n-1.
Graph apply_permutation(const Graph& g, const std::vector<int>& perm);

// Line format: "n<TAB>u1-v1,u2-v2,..." with edges sorted lexicographically;
// the edge list is empty for an edgeless graph.
std::string format_graph_line(const Graph& g);
Graph parse_graph_line(const std::string& line);

// Erdos-Renyi generation config.
struct GraphGenConfig {
  int n_min = 5;
  int n_max = 20;
  double p_min = 0.1;
  double p_max = 0.6;

  void validate() const;  // throws std::invalid_argument
};

// Draws n uniform in [n_min, n_max], p uniform in [p_min, p_max], then each
// node pair independently with probability p (pairs in lexicographic order).
Graph sample_random_graph(const GraphGenConfig& cfg, Rng& rng);

}  // namespace graphtoken
