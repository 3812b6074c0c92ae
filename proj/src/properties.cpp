#include "graphtoken/properties.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <unordered_set>

namespace graphtoken {

namespace {

struct KindInfo {
  PropertyKind kind;
  const char* name;
  int arity;
};

constexpr KindInfo kKinds[] = {
    {PropertyKind::node_count, "node_count", 0},
    {PropertyKind::edge_count, "edge_count", 0},
    {PropertyKind::has_cycle, "has_cycle", 0},
    {PropertyKind::triangle_count, "triangle_count", 0},
    {PropertyKind::node_degree, "node_degree", 1},
    {PropertyKind::connected_nodes, "connected_nodes", 1},
    {PropertyKind::reachable, "reachable", 2},
    {PropertyKind::edge_exists, "edge_exists", 2},
    {PropertyKind::shortest_path_len, "shortest_path_len", 2},
    {PropertyKind::diameter, "diameter", 0},
    {PropertyKind::max_degree, "max_degree", 0},
    {PropertyKind::avg_local_clustering, "avg_local_clustering", 0},
    {PropertyKind::max_core_number, "max_core_number", 0},
    {PropertyKind::avg_shortest_path_len, "avg_shortest_path_len", 0},
    {PropertyKind::is_planar, "is_planar", 0},
    {PropertyKind::is_bipartite, "is_bipartite", 0},
};

const KindInfo& info(PropertyKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  throw std::invalid_argument("unknown property kind");
}

}  // namespace

int property_arity(PropertyKind kind) { return info(kind).arity; }

const char* property_name(PropertyKind kind) { return info(kind).name; }

PropertyKind property_from_name(const std::string& name) {
  for (const auto& k : kKinds) {
    if (name == k.name) return k.kind;
  }
  throw std::invalid_argument("unknown property kind: " + name);
}

std::vector<int> bfs_distances(const Graph& g, int src) {
  std::vector<int> dist(static_cast<std::size_t>(g.node_count()), -1);
  std::deque<int> queue{src};
  dist[src] = 0;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int w : g.neighbors(v)) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

bool is_connected(const Graph& g) {
  auto dist = bfs_distances(g, 0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

bool has_cycle(const Graph& g) {
  int n = g.node_count();
  std::vector<int> parent(static_cast<std::size_t>(n), -2);
  for (int root = 0; root < n; ++root) {
    if (parent[root] != -2) continue;
    parent[root] = -1;
    std::vector<int> stack{root};
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : g.neighbors(v)) {
        if (parent[w] == -2) {
          parent[w] = v;
          stack.push_back(w);
        } else if (w != parent[v]) {
          return true;
        }
      }
    }
  }
  return false;
}

std::int64_t triangle_count(const Graph& g) {
  int n = g.node_count();
  std::int64_t count = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (!g.has_edge(a, b)) continue;
      for (int c = b + 1; c < n; ++c) {
        if (g.has_edge(a, c) && g.has_edge(b, c)) ++count;
      }
    }
  }
  return count;
}

int diameter(const Graph& g) {
  int best = 0;
  for (int v = 0; v < g.node_count(); ++v) {
    for (int d : bfs_distances(g, v)) best = std::max(best, d);
  }
  return best;
}

double avg_local_clustering(const Graph& g) {
  int n = g.node_count();
  double total = 0.0;
  for (int v = 0; v < n; ++v) {
    const auto& nb = g.neighbors(v);
    int deg = static_cast<int>(nb.size());
    if (deg < 2) continue;  // contributes 0
    int closed = 0;
    for (std::size_t i = 0; i < nb.size(); ++i) {
      for (std::size_t j = i + 1; j < nb.size(); ++j) {
        if (g.has_edge(nb[i], nb[j])) ++closed;
      }
    }
    total += 2.0 * closed / (static_cast<double>(deg) * (deg - 1));
  }
  return total / n;
}

int max_core_number(const Graph& g) {
  int n = g.node_count();
  std::vector<int> deg(static_cast<std::size_t>(n));
  std::vector<bool> removed(static_cast<std::size_t>(n), false);
  for (int v = 0; v < n; ++v) deg[v] = g.degree(v);
  int best = 0;
  for (int step = 0; step < n; ++step) {
    int pick = -1;
    for (int v = 0; v < n; ++v) {
      if (!removed[v] && (pick < 0 || deg[v] < deg[pick])) pick = v;
    }
    best = std::max(best, deg[pick]);
    removed[pick] = true;
    for (int w : g.neighbors(pick)) {
      if (!removed[w]) --deg[w];
    }
  }
  return best;
}

double avg_shortest_path_len(const Graph& g) {
  int n = g.node_count();
  double total = 0.0;
  std::int64_t pairs = 0;
  for (int v = 0; v < n; ++v) {
    auto dist = bfs_distances(g, v);
    for (int w = v + 1; w < n; ++w) {
      if (dist[w] > 0) {
        total += dist[w];
        ++pairs;
      }
    }
  }
  return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

bool is_bipartite(const Graph& g) {
  int n = g.node_count();
  std::vector<int> color(static_cast<std::size_t>(n), -1);
  for (int root = 0; root < n; ++root) {
    if (color[root] >= 0) continue;
    color[root] = 0;
    std::deque<int> queue{root};
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      for (int w : g.neighbors(v)) {
        if (color[w] < 0) {
          color[w] = 1 - color[v];
          queue.push_back(w);
        } else if (color[w] == color[v]) {
          return false;
        }
      }
    }
  }
  return true;
}

namespace {

// Compact graph for the minor search: adjacency masks over <= 16 nodes.
struct MaskGraph {
  int n = 0;
  std::array<std::uint32_t, 16> adj{};

  int edge_count() const {
    int m = 0;
    for (int v = 0; v < n; ++v) m += std::popcount(adj[v]);
    return m / 2;
  }

  std::string key() const {
    std::string k(static_cast<std::size_t>(2 * n + 1), '\0');
    k[0] = static_cast<char>(n);
    for (int v = 0; v < n; ++v) {
      k[1 + 2 * v] = static_cast<char>(adj[v] & 0xff);
      k[2 + 2 * v] = static_cast<char>((adj[v] >> 8) & 0xff);
    }
    return k;
  }
};

bool has_k5_subgraph(const MaskGraph& g) {
  for (int a = 0; a < g.n; ++a) {
    for (int b = a + 1; b < g.n; ++b) {
      if (!(g.adj[a] >> b & 1)) continue;
      std::uint32_t ab = g.adj[a] & g.adj[b];
      for (int c = b + 1; c < g.n; ++c) {
        if (!(ab >> c & 1)) continue;
        std::uint32_t abc = ab & g.adj[c];
        for (int d = c + 1; d < g.n; ++d) {
          if (!(abc >> d & 1)) continue;
          if ((abc & g.adj[d]) >> (d + 1)) return true;
        }
      }
    }
  }
  return false;
}

bool has_k33_subgraph(const MaskGraph& g) {
  for (int a = 0; a < g.n; ++a) {
    for (int b = a + 1; b < g.n; ++b) {
      std::uint32_t ab = g.adj[a] & g.adj[b];
      if (std::popcount(ab) < 3) continue;
      for (int c = b + 1; c < g.n; ++c) {
        std::uint32_t common = ab & g.adj[c] & ~(1u << a | 1u << b | 1u << c);
        if (std::popcount(common) >= 3) return true;
      }
    }
  }
  return false;
}

// Merges v into u and removes index v (higher indices shift down).
MaskGraph contract_edge(const MaskGraph& g, int u, int v) {
  MaskGraph out;
  out.n = g.n - 1;
  std::array<std::uint32_t, 16> merged = g.adj;
  merged[u] |= g.adj[v];
  for (int w = 0; w < g.n; ++w) {
    if (g.adj[v] >> w & 1) merged[w] |= 1u << u;
    merged[w] &= ~(1u << v);
  }
  merged[u] &= ~(1u << u);
  std::uint32_t low = (1u << v) - 1;
  int out_row = 0;
  for (int w = 0; w < g.n; ++w) {
    if (w == v) continue;
    std::uint32_t row = merged[w];
    out.adj[out_row++] = (row & low) | ((row >> (v + 1)) << v);
  }
  return out;
}

enum class MinorTarget { k5, k33 };

bool has_minor(const MaskGraph& root, MinorTarget target,
               std::unordered_set<std::string>& visited) {
  const int min_nodes = target == MinorTarget::k5 ? 5 : 6;
  const int min_edges = target == MinorTarget::k5 ? 10 : 9;
  std::vector<MaskGraph> stack{root};
  while (!stack.empty()) {
    MaskGraph g = stack.back();
    stack.pop_back();
    if (g.n < min_nodes || g.edge_count() < min_edges) continue;
    if (target == MinorTarget::k5 ? has_k5_subgraph(g) : has_k33_subgraph(g)) return true;
    for (int u = 0; u < g.n; ++u) {
      for (int v = u + 1; v < g.n; ++v) {
        if (!(g.adj[u] >> v & 1)) continue;
        MaskGraph next = contract_edge(g, u, v);
        if (visited.insert(next.key()).second) stack.push_back(next);
      }
    }
  }
  return false;
}

// Planarity-preserving reduction: drop degree <= 1 nodes and suppress
// degree-2 nodes until stable.
MaskGraph reduce_for_planarity(MaskGraph g) {
  bool changed = true;
  while (changed && g.n > 4) {
    changed = false;
    for (int v = 0; v < g.n; ++v) {
      int deg = std::popcount(g.adj[v]);
      if (deg <= 1) {
        MaskGraph out;
        out.n = g.n - 1;
        std::uint32_t low = (1u << v) - 1;
        int row = 0;
        for (int w = 0; w < g.n; ++w) {
          if (w == v) continue;
          std::uint32_t r = g.adj[w] & ~(1u << v);
          out.adj[row++] = (r & low) | ((r >> (v + 1)) << v);
        }
        g = out;
        changed = true;
        break;
      }
      if (deg == 2) {
        // Contracting one incident edge removes v and joins its neighbors.
        int a = std::countr_zero(g.adj[v]);
        g = contract_edge(g, a, v);
        changed = true;
        break;
      }
    }
  }
  return g;
}

bool component_planar(const MaskGraph& comp) {
  MaskGraph g = reduce_for_planarity(comp);
  if (g.n <= 4) return true;
  int m = g.edge_count();
  if (m > 3 * g.n - 6) return false;
  if (m < 9) return true;  // too few edges for either Kuratowski minor
  std::unordered_set<std::string> visited;
  if (has_minor(g, MinorTarget::k5, visited)) return false;
  visited.clear();
  return !has_minor(g, MinorTarget::k33, visited);
}

}  // namespace

bool is_planar(const Graph& g) {
  if (g.node_count() > 16) {
    throw std::invalid_argument("planarity test supports n <= 16");
  }
  if (g.node_count() <= 4 || !has_cycle(g)) return true;
  auto masks = g.adjacency_masks();
  std::vector<bool> seen(static_cast<std::size_t>(g.node_count()), false);
  for (int root = 0; root < g.node_count(); ++root) {
    if (seen[root]) continue;
    auto dist = bfs_distances(g, root);
    std::vector<int> members;
    for (int v = 0; v < g.node_count(); ++v) {
      if (dist[v] >= 0) {
        seen[v] = true;
        members.push_back(v);
      }
    }
    MaskGraph comp;
    comp.n = static_cast<int>(members.size());
    for (int i = 0; i < comp.n; ++i) {
      for (int j = 0; j < comp.n; ++j) {
        if (masks[members[i]] >> members[j] & 1) comp.adj[i] |= 1u << j;
      }
    }
    if (!component_planar(comp)) return false;
  }
  return true;
}

PropertyValue evaluate_property(const Graph& g, PropertyKind kind,
                                const std::vector<int>& args) {
  if (static_cast<int>(args.size()) != property_arity(kind)) {
    throw std::invalid_argument(std::string("property ") + property_name(kind) +
                                " expects " + std::to_string(property_arity(kind)) +
                                " node arguments");
  }
  for (int a : args) {
    if (a < 0 || a >= g.node_count()) {
      throw std::invalid_argument("node argument out of range");
    }
  }
  switch (kind) {
    case PropertyKind::node_count:
      return static_cast<std::int64_t>(g.node_count());
    case PropertyKind::edge_count:
      return static_cast<std::int64_t>(g.edge_count());
    case PropertyKind::has_cycle:
      return has_cycle(g);
    case PropertyKind::triangle_count:
      return triangle_count(g);
    case PropertyKind::node_degree:
      return static_cast<std::int64_t>(g.degree(args[0]));
    case PropertyKind::connected_nodes:
      return g.neighbors(args[0]);
    case PropertyKind::reachable:
      return bfs_distances(g, args[0])[args[1]] >= 0;
    case PropertyKind::edge_exists:
      return g.has_edge(args[0], args[1]);
    case PropertyKind::shortest_path_len: {
      int d = bfs_distances(g, args[0])[args[1]];
      if (d < 0) return Unreachable{};
      return static_cast<std::int64_t>(d);
    }
    case PropertyKind::diameter:
      return static_cast<std::int64_t>(diameter(g));
    case PropertyKind::max_degree: {
      int best = 0;
      for (int v = 0; v < g.node_count(); ++v) best = std::max(best, g.degree(v));
      return static_cast<std::int64_t>(best);
    }
    case PropertyKind::avg_local_clustering:
      return avg_local_clustering(g);
    case PropertyKind::max_core_number:
      return static_cast<std::int64_t>(max_core_number(g));
    case PropertyKind::avg_shortest_path_len:
      return avg_shortest_path_len(g);
    case PropertyKind::is_planar:
      return is_planar(g);
    case PropertyKind::is_bipartite:
      return is_bipartite(g);
  }
  throw std::invalid_argument("unknown property kind");
}

}  // namespace graphtoken
