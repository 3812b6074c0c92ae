#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphtoken/graph.hpp"
#include "graphtoken/rng.hpp"
#include "graphtoken/tensor.hpp"

namespace graphtoken {

enum class FeatureScheme { lpe, idx, lpe_idx };

const char* feature_scheme_name(FeatureScheme s);
FeatureScheme feature_scheme_from_name(const std::string& name);

struct FeatureConfig {
  FeatureScheme scheme = FeatureScheme::lpe;
  int d = 4;           // per-scheme width; lpe_idx concatenates to 2d
  int max_nodes = 20;  // identity table capacity

  int width() const { return scheme == FeatureScheme::lpe_idx ? 2 * d : d; }
  bool uses_idx() const { return scheme != FeatureScheme::lpe; }
  void validate() const;  // throws std::invalid_argument
};

// Spectral decomposition of the symmetric normalized Laplacian
// L = I - D^(-1/2) A D^(-1/2), with D^(-1/2) entries 0 for isolated nodes.
struct LpeDecomposition {
  Tensor features;                  // n x d, constant (not trainable)
  std::vector<double> eigenvalues;  // the retained (non-trivial) eigenvalues
};

// Eigenvectors for the d smallest non-trivial eigenvalues (ascending; the
// single smallest eigenpair is dropped as trivial), each sign-fixed so its
// largest-magnitude entry is positive with ties broken by lowest index.
// Columns beyond n-1 available pairs are zero-padded.
LpeDecomposition lpe_decomposition(const Graph& g, int d);
Tensor lpe_features(const Graph& g, int d);

// Fresh identity table: max_nodes x d, zero-mean Gaussian with scale
// 1/sqrt(d), trainable.
Tensor make_identity_table(int max_nodes, int d, Rng& rng);

// Row v of the table for each node v; differentiable back to the table.
// Throws std::invalid_argument when g.n exceeds the table capacity.
Tensor idx_features(Tape& tape, const Graph& g, Tensor table);

// Rowwise concatenation, a's columns first.
Tensor concat_features(Tape& tape, Tensor a, Tensor b);

// Dispatch on cfg.scheme; `table` must be provided when the scheme uses IDX.
Tensor node_features(Tape& tape, const Graph& g, const FeatureConfig& cfg, Tensor table);

}  // namespace graphtoken
