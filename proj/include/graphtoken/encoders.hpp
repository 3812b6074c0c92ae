#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "graphtoken/features.hpp"
#include "graphtoken/graph.hpp"
#include "graphtoken/tensor.hpp"

namespace graphtoken {

enum class EncoderKind { gcn, gin, mpnn, hgt, mha, node_set, edge_set };
enum class ReadoutMode {
  graph_mean,
  graph_sum,
  per_node,
  per_node_plus_graph,
  endpoint_pair,
  endpoint_pair_plus_graph,
};

const char* encoder_kind_name(EncoderKind k);
EncoderKind encoder_kind_from_name(const std::string& name);
const char* readout_mode_name(ReadoutMode m);
ReadoutMode readout_mode_from_name(const std::string& name);
bool encoder_is_set_kind(EncoderKind k);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::gcn;
  int layers = 3;  // must be 0 for node_set/edge_set
  int hidden = 128;
  int heads = 4;  // mha/hgt only
  ReadoutMode readout = ReadoutMode::graph_mean;
  int d_lm = 64;  // LM embedding width the head projects onto
  FeatureConfig feature;
  bool mpnn_mean_aggregation = false;  // default is sum

  void validate() const;  // throws std::invalid_argument
  // graph_* -> 1; per_node -> n (+1 with pooled row); endpoint -> 2 (+1)
  int tokens_out(int n) const;
};

// All trainable tensors, in declared (checkpoint) order. The head is the
// final projection to token space; everything under "conv/" or "feature/"
// is body. The set encoders' shared MLP counts toward the head so their
// convolution body is zero.
struct EncoderParams {
  EncoderConfig config;
  std::vector<std::pair<std::string, Tensor>> tensors;

  Tensor get(const std::string& name) const;
  std::vector<Tensor> trainable() const;
  std::int64_t body_param_count() const;
  std::int64_t head_param_count() const;
  void zero_grads();
};

EncoderParams init_encoder_params(const EncoderConfig& cfg, std::uint64_t seed);

// One graph convolution / attention layer (kind-dependent), exposed for
// direct testing. `layer` indexes the parameter block.
Tensor run_layer(Tape& tape, const Graph& g, Tensor h, const EncoderParams& params,
                 int layer);

struct EncodeResult {
  Tensor node_states;   // n x hidden
  Tensor graph_vector;  // 1 x hidden pooled representation (probe tap)
  Tensor readout_rows;  // tokens_out x hidden
  Tensor tokens;        // tokens_out x d_lm
};

// Full pipeline: features -> layers -> readout -> head projection.
// node_args are required by the endpoint readout modes.
EncodeResult encode_full(Tape& tape, const Graph& g, const EncoderParams& params,
                         const std::vector<int>& node_args = {});
Tensor encode(Tape& tape, const Graph& g, const EncoderParams& params,
              const std::vector<int>& node_args = {});

// Pre-projection pooled embedding (graph_mean tap) used by the probes.
std::vector<double> probe_embedding(const Graph& g, const EncoderParams& params);

struct ParamsLedgerRow {
  std::string kind;
  std::int64_t body = 0;
  std::int64_t head = 0;
};

// One row per encoder kind, sharing everything but the kind with `base`.
std::vector<ParamsLedgerRow> params_ledger(const EncoderConfig& base);

}  // namespace graphtoken
