#pragma once

#include <string>
#include <vector>

#include "graphtoken/graph.hpp"

namespace graphtoken {

// Canonical byte string: equal iff the graphs are isomorphic. Color
// refinement plus branch-and-bound over vertex orderings, minimizing the
// packed upper-triangle adjacency bits. Supports n <= 16.
std::string canonical_form(const Graph& g);

// One representative per isomorphism class of connected simple graphs on n
// nodes, 1 <= n <= 8. Built by vertex augmentation with canonical-form
// deduplication; output order is deterministic (ascending edge count, then
// canonical bits).
std::vector<Graph> enumerate_connected_graphs(int n);

// One representative per isomorphism class of free trees on n nodes,
// 1 <= n <= 16. Leaf augmentation with canonical-form deduplication;
// deterministic order as above.
std::vector<Graph> enumerate_free_trees(int n);

}  // namespace graphtoken
