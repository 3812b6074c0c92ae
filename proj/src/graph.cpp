#include "graphtoken/graph.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace graphtoken {

Graph::Graph(int n) : n_(n), adj_(static_cast<std::size_t>(std::max(n, 0))) {
  if (n < 1) throw std::invalid_argument("graph needs at least one node");
}

Graph::Graph(int n, const std::vector<std::pair<int, int>>& edges) : Graph(n) {
  for (auto [u, v] : edges) add_edge(u, v);
}

void Graph::check_node(int v) const {
  if (v < 0 || v >= n_) {
    throw std::invalid_argument("node index " + std::to_string(v) +
                                " out of range for n=" + std::to_string(n_));
  }
}

void Graph::add_edge(int u, int v) {
  check_node(u);
  check_node(v);
  if (u == v) throw std::invalid_argument("self-loop rejected");
  if (u > v) std::swap(u, v);
  auto e = std::make_pair(u, v);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
  if (it != edges_.end() && *it == e) throw std::invalid_argument("duplicate edge rejected");
  edges_.insert(it, e);
  adj_[u].insert(std::lower_bound(adj_[u].begin(), adj_[u].end(), v), v);
  adj_[v].insert(std::lower_bound(adj_[v].begin(), adj_[v].end(), u), u);
}

bool Graph::has_edge(int u, int v) const {
  check_node(u);
  check_node(v);
  if (u == v) return false;
  const auto& a = adj_[u];
  return std::binary_search(a.begin(), a.end(), v);
}

int Graph::degree(int v) const {
  check_node(v);
  return static_cast<int>(adj_[v].size());
}

const std::vector<int>& Graph::neighbors(int v) const {
  check_node(v);
  return adj_[v];
}

std::vector<std::uint64_t> Graph::adjacency_masks() const {
  if (n_ > 64) throw std::invalid_argument("adjacency masks require n <= 64");
  std::vector<std::uint64_t> m(static_cast<std::size_t>(n_), 0);
  for (auto [u, v] : edges_) {
    m[u] |= 1ull << v;
    m[v] |= 1ull << u;
  }
  return m;
}

Graph apply_permutation(const Graph& g, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != g.node_count()) {
    throw std::invalid_argument("permutation size mismatch");
  }
  Graph out(g.node_count());
  for (auto [u, v] : g.edges()) out.add_edge(perm[u], perm[v]);
  return out;
}

std::string format_graph_line(const Graph& g) {
  std::ostringstream os;
  os << g.node_count() << '\t';
  bool first = true;
  for (auto [u, v] : g.edges()) {
    if (!first) os << ',';
    os << u << '-' << v;
    first = false;
  }
  return os.str();
}

Graph parse_graph_line(const std::string& line) {
  auto tab = line.find('\t');
  if (tab == std::string::npos) throw std::invalid_argument("graph line missing tab");
  int n = std::stoi(line.substr(0, tab));
  Graph g(n);
  std::string rest = line.substr(tab + 1);
  std::istringstream is(rest);
  std::string item;
  while (std::getline(is, item, ',')) {
    auto dash = item.find('-');
    if (dash == std::string::npos) throw std::invalid_argument("bad edge token: " + item);
    g.add_edge(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
  }
  return g;
}

void GraphGenConfig::validate() const {
  if (n_min < 1 || n_min > n_max) throw std::invalid_argument("need 1 <= n_min <= n_max");
  if (p_min < 0.0 || p_min > p_max || p_max > 1.0) {
    throw std::invalid_argument("need 0 <= p_min <= p_max <= 1");
  }
}

Graph sample_random_graph(const GraphGenConfig& cfg, Rng& rng) {
  cfg.validate();
  int n = static_cast<int>(rng.uniform_int(cfg.n_min, cfg.n_max));
  double p = cfg.p_min == cfg.p_max ? cfg.p_min : rng.uniform(cfg.p_min, cfg.p_max);
  Graph g(n);
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) g.add_edge(u, v);
    }
  }
  return g;
}

}  // namespace graphtoken
