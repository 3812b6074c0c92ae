#include "graphtoken/features.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace graphtoken {

const char* feature_scheme_name(FeatureScheme s) {
  switch (s) {
    case FeatureScheme::lpe: return "lpe";
    case FeatureScheme::idx: return "idx";
    case FeatureScheme::lpe_idx: return "lpe_idx";
  }
  throw std::invalid_argument("unknown feature scheme");
}

FeatureScheme feature_scheme_from_name(const std::string& name) {
  if (name == "lpe") return FeatureScheme::lpe;
  if (name == "idx") return FeatureScheme::idx;
  if (name == "lpe_idx") return FeatureScheme::lpe_idx;
  throw std::invalid_argument("unknown feature scheme: " + name);
}

void FeatureConfig::validate() const {
  if (d < 1) throw std::invalid_argument("feature width d must be >= 1");
  if (max_nodes < 1) throw std::invalid_argument("identity table needs max_nodes >= 1");
}

LpeDecomposition lpe_decomposition(const Graph& g, int d) {
  if (d < 1) throw std::invalid_argument("lpe width must be >= 1");
  int n = g.node_count();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd inv_sqrt_deg(n);
  for (int v = 0; v < n; ++v) {
    int deg = g.degree(v);
    inv_sqrt_deg(v) = deg > 0 ? 1.0 / std::sqrt(static_cast<double>(deg)) : 0.0;
  }
  for (auto [u, v] : g.edges()) {
    double w = inv_sqrt_deg(u) * inv_sqrt_deg(v);
    lap(u, v) -= w;
    lap(v, u) -= w;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  const Eigen::MatrixXd& vecs = solver.eigenvectors();  // ascending eigenvalues

  LpeDecomposition out;
  out.features = Tensor::zeros({n, d});
  int available = std::min(d, n - 1);
  for (int k = 0; k < available; ++k) {
    int col = k + 1;  // skip the trivial smallest eigenpair
    out.eigenvalues.push_back(solver.eigenvalues()(col));
    // sign fix: largest-magnitude entry positive, lowest index breaks ties
    int pivot = 0;
    for (int i = 1; i < n; ++i) {
      if (std::fabs(vecs(i, col)) > std::fabs(vecs(pivot, col))) pivot = i;
    }
    double sign = vecs(pivot, col) < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) {
      out.features.values()[i * d + k] = sign * vecs(i, col);
    }
  }
  return out;
}

Tensor lpe_features(const Graph& g, int d) { return lpe_decomposition(g, d).features; }

Tensor make_identity_table(int max_nodes, int d, Rng& rng) {
  Tensor t = Tensor::zeros({max_nodes, d}, /*requires_grad=*/true);
  double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& v : t.values()) v = scale * rng.gaussian();
  return t;
}

Tensor idx_features(Tape& tape, const Graph& g, Tensor table) {
  if (!table.defined()) throw std::invalid_argument("idx features need a table");
  if (g.node_count() > table.rows()) {
    throw std::invalid_argument("graph exceeds identity table capacity");
  }
  std::vector<int> indices(static_cast<std::size_t>(g.node_count()));
  for (int v = 0; v < g.node_count(); ++v) indices[v] = v;
  return gather_rows(tape, table, indices);
}

Tensor concat_features(Tape& tape, Tensor a, Tensor b) {
  return concat_cols(tape, a, b);
}

Tensor node_features(Tape& tape, const Graph& g, const FeatureConfig& cfg, Tensor table) {
  cfg.validate();
  switch (cfg.scheme) {
    case FeatureScheme::lpe:
      return lpe_features(g, cfg.d);
    case FeatureScheme::idx:
      return idx_features(tape, g, table);
    case FeatureScheme::lpe_idx:
      return concat_features(tape, lpe_features(g, cfg.d), idx_features(tape, g, table));
  }
  throw std::invalid_argument("unknown feature scheme");
}

}  // namespace graphtoken
