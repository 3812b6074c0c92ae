#include "graphtoken/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphtoken {

const char* encoder_kind_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::gcn: return "gcn";
    case EncoderKind::gin: return "gin";
    case EncoderKind::mpnn: return "mpnn";
    case EncoderKind::hgt: return "hgt";
    case EncoderKind::mha: return "mha";
    case EncoderKind::node_set: return "node_set";
    case EncoderKind::edge_set: return "edge_set";
  }
  throw std::invalid_argument("unknown encoder kind");
}

EncoderKind encoder_kind_from_name(const std::string& name) {
  for (EncoderKind k : {EncoderKind::gcn, EncoderKind::gin, EncoderKind::mpnn,
                        EncoderKind::hgt, EncoderKind::mha, EncoderKind::node_set,
                        EncoderKind::edge_set}) {
    if (name == encoder_kind_name(k)) return k;
  }
  throw std::invalid_argument("unknown encoder kind: " + name);
}

const char* readout_mode_name(ReadoutMode m) {
  switch (m) {
    case ReadoutMode::graph_mean: return "graph_mean";
    case ReadoutMode::graph_sum: return "graph_sum";
    case ReadoutMode::per_node: return "per_node";
    case ReadoutMode::per_node_plus_graph: return "per_node_plus_graph";
    case ReadoutMode::endpoint_pair: return "endpoint_pair";
    case ReadoutMode::endpoint_pair_plus_graph: return "endpoint_pair_plus_graph";
  }
  throw std::invalid_argument("unknown readout mode");
}

ReadoutMode readout_mode_from_name(const std::string& name) {
  for (ReadoutMode m :
       {ReadoutMode::graph_mean, ReadoutMode::graph_sum, ReadoutMode::per_node,
        ReadoutMode::per_node_plus_graph, ReadoutMode::endpoint_pair,
        ReadoutMode::endpoint_pair_plus_graph}) {
    if (name == readout_mode_name(m)) return m;
  }
  throw std::invalid_argument("unknown readout mode: " + name);
}

bool encoder_is_set_kind(EncoderKind k) {
  return k == EncoderKind::node_set || k == EncoderKind::edge_set;
}

void EncoderConfig::validate() const {
  feature.validate();
  if (hidden < 1) throw std::invalid_argument("hidden width must be >= 1");
  if (d_lm < 1) throw std::invalid_argument("token width must be >= 1");
  if (encoder_is_set_kind(kind)) {
    if (layers != 0) {
      throw std::invalid_argument("set encoders take no convolution layers");
    }
  } else if (layers < 1) {
    throw std::invalid_argument("convolutional encoders need layers >= 1");
  }
  if ((kind == EncoderKind::mha || kind == EncoderKind::hgt) &&
      (heads < 1 || hidden % heads != 0)) {
    throw std::invalid_argument("heads must divide hidden");
  }
}

int EncoderConfig::tokens_out(int n) const {
  switch (readout) {
    case ReadoutMode::graph_mean:
    case ReadoutMode::graph_sum: return 1;
    case ReadoutMode::per_node: return n;
    case ReadoutMode::per_node_plus_graph: return n + 1;
    case ReadoutMode::endpoint_pair: return 2;
    case ReadoutMode::endpoint_pair_plus_graph: return 3;
  }
  throw std::invalid_argument("unknown readout mode");
}

Tensor EncoderParams::get(const std::string& name) const {
  for (const auto& [key, t] : tensors) {
    if (key == name) return t;
  }
  throw std::invalid_argument("missing encoder parameter: " + name);
}

std::vector<Tensor> EncoderParams::trainable() const {
  std::vector<Tensor> out;
  for (const auto& [key, t] : tensors) out.push_back(t);
  return out;
}

std::int64_t EncoderParams::body_param_count() const {
  std::int64_t total = 0;
  for (const auto& [key, t] : tensors) {
    if (key.rfind("conv/", 0) == 0 || key.rfind("feature/", 0) == 0) total += t.size();
  }
  return total;
}

std::int64_t EncoderParams::head_param_count() const {
  std::int64_t total = 0;
  for (const auto& [key, t] : tensors) {
    if (key.rfind("head/", 0) == 0 || key.rfind("set/", 0) == 0) total += t.size();
  }
  return total;
}

void EncoderParams::zero_grads() {
  for (auto& [key, t] : tensors) {
    t.grad();
    t.zero_grad();
  }
}

namespace {

Tensor init_weight(int rows, int cols, Rng& rng) {
  Tensor t = Tensor::zeros({rows, cols}, /*requires_grad=*/true);
  double s = 1.0 / std::sqrt(static_cast<double>(rows));
  for (auto& v : t.values()) v = s * rng.gaussian();
  return t;
}

Tensor init_zeros(std::vector<int> shape) {
  return Tensor::zeros(std::move(shape), /*requires_grad=*/true);
}

Tensor init_ones(int n) {
  Tensor t = Tensor::zeros({n}, /*requires_grad=*/true);
  std::fill(t.values().begin(), t.values().end(), 1.0);
  return t;
}

// symmetric-normalized adjacency with self-loops, as a constant tensor
Tensor gcn_matrix(const Graph& g) {
  int n = g.node_count();
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) inv_sqrt[v] = 1.0 / std::sqrt(g.degree(v) + 1.0);
  Tensor a = Tensor::zeros({n, n});
  for (int v = 0; v < n; ++v) a.values()[v * n + v] = inv_sqrt[v] * inv_sqrt[v];
  for (auto [u, v] : g.edges()) {
    double w = inv_sqrt[u] * inv_sqrt[v];
    a.values()[u * n + v] = w;
    a.values()[v * n + u] = w;
  }
  return a;
}

Tensor adjacency_tensor(const Graph& g) {
  int n = g.node_count();
  Tensor a = Tensor::zeros({n, n});
  for (auto [u, v] : g.edges()) {
    a.values()[u * n + v] = 1.0;
    a.values()[v * n + u] = 1.0;
  }
  return a;
}

// 0 where attention is allowed (self plus neighbors), -1e30 elsewhere
Tensor neighborhood_mask(const Graph& g) {
  int n = g.node_count();
  Tensor m = Tensor::zeros({n, n});
  std::fill(m.values().begin(), m.values().end(), -1e30);
  for (int v = 0; v < n; ++v) m.values()[v * n + v] = 0.0;
  for (auto [u, v] : g.edges()) {
    m.values()[u * n + v] = 0.0;
    m.values()[v * n + u] = 0.0;
  }
  return m;
}

Tensor mlp2(Tape& tape, Tensor x, Tensor w1, Tensor b1, Tensor w2, Tensor b2) {
  return add_row(tape, matmul(tape, relu(tape, add_row(tape, matmul(tape, x, w1), b1)), w2),
                 b2);
}

Tensor mean_rows(Tape& tape, Tensor x) {
  if (x.rows() == 0) return Tensor::zeros({1, x.cols()});
  Tensor ones = Tensor::zeros({1, x.rows()});
  std::fill(ones.values().begin(), ones.values().end(), 1.0);
  return mul_scalar(tape, matmul(tape, ones, x), 1.0 / x.rows());
}

Tensor sum_rows(Tape& tape, Tensor x) {
  if (x.rows() == 0) return Tensor::zeros({1, x.cols()});
  Tensor ones = Tensor::zeros({1, x.rows()});
  std::fill(ones.values().begin(), ones.values().end(), 1.0);
  return matmul(tape, ones, x);
}

std::string layer_key(int layer, const char* suffix) {
  return "conv/" + std::to_string(layer) + "/" + suffix;
}

Tensor gcn_layer(Tape& tape, const Graph& g, Tensor h, const EncoderParams& p, int i) {
  return relu(tape, matmul(tape, matmul(tape, gcn_matrix(g), h), p.get(layer_key(i, "w"))));
}

Tensor gin_layer(Tape& tape, const Graph& g, Tensor h, const EncoderParams& p, int i) {
  Tensor scaled = scale(tape, h, add_scalar(tape, p.get(layer_key(i, "eps")), 1.0));
  Tensor pre = add(tape, scaled, matmul(tape, adjacency_tensor(g), h));
  return mlp2(tape, pre, p.get(layer_key(i, "w1")), p.get(layer_key(i, "b1")),
              p.get(layer_key(i, "w2")), p.get(layer_key(i, "b2")));
}

Tensor mpnn_layer(Tape& tape, const Graph& g, Tensor h, const EncoderParams& p, int i) {
  int n = g.node_count();
  std::vector<int> src, dst;
  for (auto [u, v] : g.edges()) {
    src.push_back(u);
    dst.push_back(v);
    src.push_back(v);
    dst.push_back(u);
  }
  Tensor pair_in = concat_cols(tape, gather_rows(tape, h, src), gather_rows(tape, h, dst));
  Tensor messages = mlp2(tape, pair_in, p.get(layer_key(i, "edge_w1")),
                         p.get(layer_key(i, "edge_b1")), p.get(layer_key(i, "edge_w2")),
                         p.get(layer_key(i, "edge_b2")));
  Tensor pooled = p.config.mpnn_mean_aggregation
                      ? segment_mean(tape, messages, dst, n)
                      : segment_sum(tape, messages, dst, n);
  return mlp2(tape, concat_cols(tape, h, pooled), p.get(layer_key(i, "node_w1")),
              p.get(layer_key(i, "node_b1")), p.get(layer_key(i, "node_w2")),
              p.get(layer_key(i, "node_b2")));
}

Tensor mha_layer(Tape& tape, const Graph& g, Tensor h, const EncoderParams& p, int i) {
  int hidden = p.config.hidden, heads = p.config.heads, dh = hidden / heads;
  Tensor q = add_row(tape, matmul(tape, h, p.get(layer_key(i, "wq"))), p.get(layer_key(i, "bq")));
  Tensor k = add_row(tape, matmul(tape, h, p.get(layer_key(i, "wk"))), p.get(layer_key(i, "bk")));
  Tensor v = add_row(tape, matmul(tape, h, p.get(layer_key(i, "wv"))), p.get(layer_key(i, "bv")));
  Tensor mask = neighborhood_mask(g);
  Tensor cat;
  for (int head = 0; head < heads; ++head) {
    Tensor qh = slice_cols(tape, q, head * dh, dh);
    Tensor kh = slice_cols(tape, k, head * dh, dh);
    Tensor vh = slice_cols(tape, v, head * dh, dh);
    Tensor scores = add(
        tape, mul_scalar(tape, matmul(tape, qh, transpose(tape, kh)), 1.0 / std::sqrt(dh)),
        mask);
    Tensor head_out = matmul(tape, softmax_rows(tape, scores), vh);
    cat = head == 0 ? head_out : concat_cols(tape, cat, head_out);
  }
  Tensor out =
      add_row(tape, matmul(tape, cat, p.get(layer_key(i, "wo"))), p.get(layer_key(i, "bo")));
  Tensor normed = layer_norm_rows(tape, add(tape, h, out), 1e-5);
  return add_row(tape, mul_row(tape, normed, p.get(layer_key(i, "ln_g"))),
                 p.get(layer_key(i, "ln_b")));
}

Tensor hgt_layer(Tape& tape, const Graph& g, Tensor h, const EncoderParams& p, int i) {
  int hidden = p.config.hidden, heads = p.config.heads, dh = hidden / heads;
  Tensor k = add_row(tape, matmul(tape, h, p.get(layer_key(i, "wk"))), p.get(layer_key(i, "bk")));
  Tensor q = add_row(tape, matmul(tape, h, p.get(layer_key(i, "wq"))), p.get(layer_key(i, "bq")));
  Tensor v = add_row(tape, matmul(tape, h, p.get(layer_key(i, "wv"))), p.get(layer_key(i, "bv")));
  Tensor att = p.get(layer_key(i, "att"));  // heads*dh x dh, per-head blocks
  Tensor msg = p.get(layer_key(i, "msg"));
  Tensor mask = neighborhood_mask(g);
  Tensor cat;
  for (int head = 0; head < heads; ++head) {
    Tensor kh = slice_cols(tape, k, head * dh, dh);
    Tensor qh = slice_cols(tape, q, head * dh, dh);
    Tensor vh = slice_cols(tape, v, head * dh, dh);
    Tensor att_h = slice_rows(tape, att, head * dh, dh);
    Tensor msg_h = slice_rows(tape, msg, head * dh, dh);
    // score[u][v] = (k_u . att_h . q_v) / sqrt(dh); rows become targets
    Tensor src_tgt = matmul(tape, matmul(tape, kh, att_h), transpose(tape, qh));
    Tensor scores =
        add(tape, mul_scalar(tape, transpose(tape, src_tgt), 1.0 / std::sqrt(dh)), mask);
    Tensor head_out = matmul(tape, softmax_rows(tape, scores), matmul(tape, vh, msg_h));
    cat = head == 0 ? head_out : concat_cols(tape, cat, head_out);
  }
  Tensor out = add_row(tape, matmul(tape, cat, p.get(layer_key(i, "agg_w"))),
                       p.get(layer_key(i, "agg_b")));
  return add(tape, h, out);
}

}  // namespace

EncoderParams init_encoder_params(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = Rng::derive(seed, "encoder-init");
  EncoderParams p;
  p.config = cfg;
  auto push = [&p](std::string name, Tensor t) {
    p.tensors.emplace_back(std::move(name), std::move(t));
  };
  int feat = cfg.feature.width();
  int h = cfg.hidden;
  if (cfg.feature.uses_idx()) {
    push("feature/idx", make_identity_table(cfg.feature.max_nodes, cfg.feature.d, rng));
  }
  switch (cfg.kind) {
    case EncoderKind::gcn:
      for (int i = 0; i < cfg.layers; ++i) {
        push(layer_key(i, "w"), init_weight(i == 0 ? feat : h, h, rng));
      }
      break;
    case EncoderKind::gin:
      for (int i = 0; i < cfg.layers; ++i) {
        int in = i == 0 ? feat : h;
        push(layer_key(i, "eps"), Tensor::zeros({}, true));
        push(layer_key(i, "w1"), init_weight(in, h, rng));
        push(layer_key(i, "b1"), init_zeros({h}));
        push(layer_key(i, "w2"), init_weight(h, h, rng));
        push(layer_key(i, "b2"), init_zeros({h}));
      }
      break;
    case EncoderKind::mpnn:
      for (int i = 0; i < cfg.layers; ++i) {
        int in = i == 0 ? feat : h;
        push(layer_key(i, "edge_w1"), init_weight(2 * in, h, rng));
        push(layer_key(i, "edge_b1"), init_zeros({h}));
        push(layer_key(i, "edge_w2"), init_weight(h, h, rng));
        push(layer_key(i, "edge_b2"), init_zeros({h}));
        push(layer_key(i, "node_w1"), init_weight(in + h, h, rng));
        push(layer_key(i, "node_b1"), init_zeros({h}));
        push(layer_key(i, "node_w2"), init_weight(h, h, rng));
        push(layer_key(i, "node_b2"), init_zeros({h}));
      }
      break;
    case EncoderKind::mha:
      push("conv/in/w", init_weight(feat, h, rng));
      push("conv/in/b", init_zeros({h}));
      for (int i = 0; i < cfg.layers; ++i) {
        for (const char* name : {"wq", "wk", "wv", "wo"}) {
          push(layer_key(i, name), init_weight(h, h, rng));
        }
        for (const char* name : {"bq", "bk", "bv", "bo"}) {
          push(layer_key(i, name), init_zeros({h}));
        }
        push(layer_key(i, "ln_g"), init_ones(h));
        push(layer_key(i, "ln_b"), init_zeros({h}));
      }
      break;
    case EncoderKind::hgt: {
      int dh = h / cfg.heads;
      push("conv/in/w", init_weight(feat, h, rng));
      push("conv/in/b", init_zeros({h}));
      for (int i = 0; i < cfg.layers; ++i) {
        for (const char* name : {"wk", "wq", "wv"}) {
          push(layer_key(i, name), init_weight(h, h, rng));
        }
        for (const char* name : {"bk", "bq", "bv"}) {
          push(layer_key(i, name), init_zeros({h}));
        }
        push(layer_key(i, "att"), init_weight(cfg.heads * dh, dh, rng));
        push(layer_key(i, "msg"), init_weight(cfg.heads * dh, dh, rng));
        push(layer_key(i, "agg_w"), init_weight(h, h, rng));
        push(layer_key(i, "agg_b"), init_zeros({h}));
      }
      break;
    }
    case EncoderKind::node_set:
      push("set/w1", init_weight(feat, h, rng));
      push("set/b1", init_zeros({h}));
      push("set/w2", init_weight(h, h, rng));
      push("set/b2", init_zeros({h}));
      break;
    case EncoderKind::edge_set:
      push("set/w1", init_weight(2 * feat, h, rng));
      push("set/b1", init_zeros({h}));
      push("set/w2", init_weight(h, h, rng));
      push("set/b2", init_zeros({h}));
      break;
  }
  // small head init keeps the initial soft tokens near the scale of the
  // LM's own embeddings instead of swamping its activation statistics
  Tensor head_w = init_weight(h, cfg.d_lm, rng);
  for (auto& v : head_w.values()) v *= 0.1;
  push("head/w", std::move(head_w));
  push("head/b", init_zeros({cfg.d_lm}));
  return p;
}

Tensor run_layer(Tape& tape, const Graph& g, Tensor h, const EncoderParams& params,
                 int layer) {
  switch (params.config.kind) {
    case EncoderKind::gcn: return gcn_layer(tape, g, h, params, layer);
    case EncoderKind::gin: return gin_layer(tape, g, h, params, layer);
    case EncoderKind::mpnn: return mpnn_layer(tape, g, h, params, layer);
    case EncoderKind::mha: return mha_layer(tape, g, h, params, layer);
    case EncoderKind::hgt: return hgt_layer(tape, g, h, params, layer);
    default:
      throw std::invalid_argument("set encoders have no convolution layers");
  }
}

EncodeResult encode_full(Tape& tape, const Graph& g, const EncoderParams& params,
                         const std::vector<int>& node_args) {
  const EncoderConfig& cfg = params.config;
  cfg.validate();
  int n = g.node_count();
  Tensor table = cfg.feature.uses_idx() ? params.get("feature/idx") : Tensor();
  Tensor feats = node_features(tape, g, cfg.feature, table);

  Tensor states, pool_src;
  if (cfg.kind == EncoderKind::node_set) {
    states = mlp2(tape, feats, params.get("set/w1"), params.get("set/b1"),
                  params.get("set/w2"), params.get("set/b2"));
    pool_src = states;
  } else if (cfg.kind == EncoderKind::edge_set) {
    std::vector<int> us, vs;
    for (auto [u, v] : g.edges()) {
      us.push_back(u);
      vs.push_back(v);
    }
    if (us.empty()) {
      states = Tensor::zeros({n, cfg.hidden});
      pool_src = Tensor::zeros({0, cfg.hidden});
    } else {
      Tensor pair_in =
          concat_cols(tape, gather_rows(tape, feats, us), gather_rows(tape, feats, vs));
      Tensor edge_states = mlp2(tape, pair_in, params.get("set/w1"), params.get("set/b1"),
                                params.get("set/w2"), params.get("set/b2"));
      std::vector<int> both = us;
      both.insert(both.end(), vs.begin(), vs.end());
      states = segment_sum(tape, concat_rows(tape, {edge_states, edge_states}), both, n);
      pool_src = edge_states;
    }
  } else {
    Tensor h = feats;
    if (cfg.kind == EncoderKind::mha || cfg.kind == EncoderKind::hgt) {
      h = add_row(tape, matmul(tape, h, params.get("conv/in/w")), params.get("conv/in/b"));
    }
    for (int i = 0; i < cfg.layers; ++i) h = run_layer(tape, g, h, params, i);
    states = h;
    pool_src = h;
  }

  EncodeResult out;
  out.node_states = states;
  out.graph_vector = mean_rows(tape, pool_src);

  switch (cfg.readout) {
    case ReadoutMode::graph_mean:
      out.readout_rows = out.graph_vector;
      break;
    case ReadoutMode::graph_sum:
      out.readout_rows = sum_rows(tape, pool_src);
      break;
    case ReadoutMode::per_node:
      out.readout_rows = states;
      break;
    case ReadoutMode::per_node_plus_graph:
      out.readout_rows = concat_rows(tape, {states, out.graph_vector});
      break;
    case ReadoutMode::endpoint_pair:
    case ReadoutMode::endpoint_pair_plus_graph: {
      if (node_args.size() != 2) {
        throw std::invalid_argument("endpoint readout needs two node arguments");
      }
      Tensor pair = gather_rows(tape, states, {node_args[0], node_args[1]});
      out.readout_rows = cfg.readout == ReadoutMode::endpoint_pair
                             ? pair
                             : concat_rows(tape, {pair, out.graph_vector});
      break;
    }
  }
  out.tokens =
      add_row(tape, matmul(tape, out.readout_rows, params.get("head/w")), params.get("head/b"));
  return out;
}

Tensor encode(Tape& tape, const Graph& g, const EncoderParams& params,
              const std::vector<int>& node_args) {
  return encode_full(tape, g, params, node_args).tokens;
}

std::vector<double> probe_embedding(const Graph& g, const EncoderParams& params) {
  Tape tape;
  tape.set_recording(false);
  return encode_full(tape, g, params).graph_vector.values();
}

std::vector<ParamsLedgerRow> params_ledger(const EncoderConfig& base) {
  std::vector<ParamsLedgerRow> rows;
  for (EncoderKind k : {EncoderKind::gcn, EncoderKind::gin, EncoderKind::mpnn,
                        EncoderKind::hgt, EncoderKind::mha, EncoderKind::node_set,
                        EncoderKind::edge_set}) {
    EncoderConfig cfg = base;
    cfg.kind = k;
    cfg.layers = encoder_is_set_kind(k) ? 0 : std::max(base.layers, 1);
    EncoderParams p = init_encoder_params(cfg, 0);
    rows.push_back({encoder_kind_name(k), p.body_param_count(), p.head_param_count()});
  }
  return rows;
}

}  // namespace graphtoken
