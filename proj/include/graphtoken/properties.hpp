#pragma once

#include <string>
#include <variant>
#include <vector>

#include "graphtoken/graph.hpp"

namespace graphtoken {

enum class PropertyKind {
  node_count,
  edge_count,
  has_cycle,
  triangle_count,
  node_degree,
  connected_nodes,
  reachable,
  edge_exists,
  shortest_path_len,
  diameter,
  max_degree,
  avg_local_clustering,
  max_core_number,
  avg_shortest_path_len,
  is_planar,
  is_bipartite,
};

// Number of auxiliary node arguments the kind takes (0, 1 or 2).
int property_arity(PropertyKind kind);

const char* property_name(PropertyKind kind);
PropertyKind property_from_name(const std::string& name);

// Marker for shortest_path_len on an unreachable pair.
struct Unreachable {
  bool operator==(const Unreachable&) const { return true; }
};

using PropertyValue =
    std::variant<std::int64_t, bool, double, std::vector<int>, Unreachable>;

// Exact property evaluation by direct algorithms: BFS for distance-based
// kinds, triple enumeration for triangles, iterative peeling for the core
// number, K5/K3,3 minor search for planarity (n <= 16 only).
//
// Throws std::invalid_argument on arity mismatch or out-of-range node
// arguments, and on is_planar with n > 16.
PropertyValue evaluate_property(const Graph& g, PropertyKind kind,
                                const std::vector<int>& args = {});

// Individual algorithms, exposed for direct use.
bool has_cycle(const Graph& g);
std::int64_t triangle_count(const Graph& g);
// BFS distances from src; -1 marks unreachable nodes.
std::vector<int> bfs_distances(const Graph& g, int src);
bool is_connected(const Graph& g);
// Max distance over reachable pairs (0 if there are none).
int diameter(const Graph& g);
double avg_local_clustering(const Graph& g);
int max_core_number(const Graph& g);
// Mean distance over unordered reachable pairs (0 if there are none).
double avg_shortest_path_len(const Graph& g);
bool is_bipartite(const Graph& g);
// Wagner characterization: planar iff no K5 and no K3,3 minor. n <= 16.
bool is_planar(const Graph& g);

}  // namespace graphtoken
