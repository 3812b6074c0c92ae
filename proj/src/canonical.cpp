#include "graphtoken/canonical.hpp"

#include "graphtoken/properties.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>

namespace graphtoken {

namespace {

class Canonicalizer {
 public:
  explicit Canonicalizer(const Graph& g) : n_(g.node_count()) {
    auto masks = g.adjacency_masks();
    for (int v = 0; v < n_; ++v) adj_[v] = static_cast<std::uint32_t>(masks[v]);
    edge_count_ = g.edge_count();
  }

  std::string run() {
    std::vector<int> colors(static_cast<std::size_t>(n_), 0);
    refine(colors);
    search(colors);
    std::string out;
    out.push_back(static_cast<char>(n_));
    out.push_back(static_cast<char>(edge_count_ & 0xff));
    out.push_back(static_cast<char>((edge_count_ >> 8) & 0xff));
    out.append(best_.begin(), best_.end());
    return out;
  }

 private:
  // Remaps colors onto contiguous ranks 0..k-1, preserving numeric order.
  // Returns the cell count.
  static int rank_normalize(std::vector<int>& colors) {
    std::vector<int> values(colors);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (int& c : colors) {
      c = static_cast<int>(std::lower_bound(values.begin(), values.end(), c) -
                           values.begin());
    }
    return static_cast<int>(values.size());
  }

  // 1-WL refinement: recolor by (own color, sorted neighbor colors) until the
  // cell count stops growing. Ranks are label-independent, and the primary
  // sort on the own color preserves cell order across passes.
  void refine(std::vector<int>& colors) const {
    int cell_count = rank_normalize(colors);
    while (true) {
      std::vector<std::pair<std::vector<int>, int>> keyed;
      keyed.reserve(static_cast<std::size_t>(n_));
      for (int v = 0; v < n_; ++v) {
        std::vector<int> key{colors[v]};
        for (int w = 0; w < n_; ++w) {
          if (adj_[v] >> w & 1) key.push_back(colors[w]);
        }
        std::sort(key.begin() + 1, key.end());
        keyed.emplace_back(std::move(key), v);
      }
      std::sort(keyed.begin(), keyed.end());
      std::vector<int> next(static_cast<std::size_t>(n_));
      int rank = -1;
      const std::vector<int>* prev = nullptr;
      for (const auto& [key, v] : keyed) {
        if (prev == nullptr || key != *prev) ++rank;
        next[v] = rank;
        prev = &key;
      }
      colors = std::move(next);
      if (rank + 1 == cell_count) return;
      cell_count = rank + 1;
    }
  }

  // Packs adjacency bits of the ordered prefix (column-major upper triangle,
  // MSB first within bytes).
  std::vector<std::uint8_t> pack_bits(const std::vector<int>& order) const {
    int k = static_cast<int>(order.size());
    int nbits = k * (k - 1) / 2;
    std::vector<std::uint8_t> bits(static_cast<std::size_t>((nbits + 7) / 8), 0);
    int idx = 0;
    for (int j = 1; j < k; ++j) {
      for (int i = 0; i < j; ++i, ++idx) {
        if (adj_[order[i]] >> order[j] & 1) {
          bits[idx / 8] |= static_cast<std::uint8_t>(0x80u >> (idx % 8));
        }
      }
    }
    return bits;
  }

  // -1 / 0 / +1 comparison of the first nbits of a against best_.
  int compare_prefix(const std::vector<std::uint8_t>& a, int nbits) const {
    for (int idx = 0; idx < nbits; ++idx) {
      int av = a[idx / 8] >> (7 - idx % 8) & 1;
      int bv = best_[idx / 8] >> (7 - idx % 8) & 1;
      if (av != bv) return av < bv ? -1 : 1;
    }
    return 0;
  }

  // One representative per twin class of the cell: vertices with identical
  // neighborhoods outside the pair are exchangeable by an automorphism that
  // fixes everything else, so their branches are equivalent.
  std::vector<int> twin_representatives(const std::vector<int>& cell) const {
    std::size_t k = cell.size();
    std::vector<std::size_t> root(k);
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](std::size_t x) {
      while (root[x] != x) x = root[x] = root[root[x]];
      return x;
    };
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        int u = cell[i], v = cell[j];
        std::uint32_t mask = ~((1u << u) | (1u << v));
        if ((adj_[u] & mask) == (adj_[v] & mask)) root[find(i)] = find(j);
      }
    }
    std::vector<int> reps;
    for (std::size_t i = 0; i < k; ++i) {
      if (find(i) == i) reps.push_back(cell[i]);
    }
    return reps;
  }

  void search(const std::vector<int>& colors) {
    int num_cells = *std::max_element(colors.begin(), colors.end()) + 1;
    std::vector<std::vector<int>> cells(static_cast<std::size_t>(num_cells));
    for (int v = 0; v < n_; ++v) cells[colors[v]].push_back(v);

    std::vector<int> prefix;
    int branch_cell = -1;
    for (int c = 0; c < num_cells; ++c) {
      if (cells[c].size() == 1) {
        prefix.push_back(cells[c][0]);
      } else {
        branch_cell = c;
        break;
      }
    }

    if (branch_cell < 0) {
      auto bits = pack_bits(prefix);
      if (!have_best_ || compare_prefix(bits, n_ * (n_ - 1) / 2) < 0) {
        best_ = std::move(bits);
        have_best_ = true;
      }
      return;
    }

    if (have_best_) {
      int k = static_cast<int>(prefix.size());
      if (compare_prefix(pack_bits(prefix), k * (k - 1) / 2) > 0) return;
    }

    for (int v : twin_representatives(cells[branch_cell])) {
      std::vector<int> split(static_cast<std::size_t>(n_));
      for (int x = 0; x < n_; ++x) split[x] = colors[x] * 2 + (x == v ? 0 : 1);
      refine(split);
      search(split);
    }
  }

  int n_;
  int edge_count_ = 0;
  std::array<std::uint32_t, 16> adj_{};
  std::vector<std::uint8_t> best_;
  bool have_best_ = false;
};

}  // namespace

std::string canonical_form(const Graph& g) {
  if (g.node_count() > 16) {
    throw std::invalid_argument("canonical form supports n <= 16");
  }
  return Canonicalizer(g).run();
}

std::vector<Graph> enumerate_connected_graphs(int n) {
  if (n < 1 || n > 8) {
    throw std::invalid_argument("connected-graph enumeration supports 1 <= n <= 8");
  }
  // Vertex augmentation over all isomorphism classes (connected or not):
  // every k-node class arises from some (k-1)-node class by attaching the
  // last vertex, so augment-and-dedup is complete per level.
  std::vector<Graph> level{Graph(1)};
  for (int k = 2; k <= n; ++k) {
    std::map<std::string, Graph> next;
    for (const Graph& g : level) {
      for (std::uint32_t subset = 0; subset < (1u << (k - 1)); ++subset) {
        Graph h(k);
        for (auto [u, v] : g.edges()) h.add_edge(u, v);
        for (int b = 0; b < k - 1; ++b) {
          if (subset >> b & 1) h.add_edge(b, k - 1);
        }
        next.emplace(canonical_form(h), std::move(h));
      }
    }
    level.clear();
    for (auto& [key, g] : next) level.push_back(std::move(g));
  }
  std::vector<Graph> out;
  for (const Graph& g : level) {
    if (is_connected(g)) out.push_back(g);
  }
  return out;
}

std::vector<Graph> enumerate_free_trees(int n) {
  if (n < 1 || n > 16) {
    throw std::invalid_argument("free-tree enumeration supports 1 <= n <= 16");
  }
  // Every tree on k nodes has a leaf whose removal leaves a (k-1)-node tree,
  // so leaf augmentation covers every class.
  std::vector<Graph> trees{Graph(1)};
  for (int k = 2; k <= n; ++k) {
    std::map<std::string, Graph> next;
    for (const Graph& t : trees) {
      for (int v = 0; v < k - 1; ++v) {
        Graph h(k);
        for (auto [a, b] : t.edges()) h.add_edge(a, b);
        h.add_edge(v, k - 1);
        next.emplace(canonical_form(h), std::move(h));
      }
    }
    trees.clear();
    for (auto& [key, g] : next) trees.push_back(std::move(g));
  }
  return trees;
}

}  // namespace graphtoken
