#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphtoken/encoders.hpp"
#include "graphtoken/lm.hpp"
#include "graphtoken/optimizer.hpp"
#include "graphtoken/tasks.hpp"

namespace graphtoken {

struct TrainLogEntry {
  int step = 0;
  double loss = 0.0;
  double train_accuracy = -1.0;  // filled at evaluation steps only
};

struct TrainResult {
  EncoderParams params;  // checkpoint maximizing train-split accuracy
  std::vector<TrainLogEntry> log;
  double best_train_accuracy = -1.0;
  int best_step = -1;
  int skipped_instances = 0;  // context overflows
};

struct SoftPromptResult {
  Tensor prompt;  // n_tokens x d_lm, shared across instances
  std::vector<TrainLogEntry> log;
  double best_train_accuracy = -1.0;
  int best_step = -1;
};

struct EvalRecord {
  std::string prediction;
  std::string answer;
  bool correct = false;
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<EvalRecord> records;
};

// Node arguments handed to the readout: endpoint modes duplicate a single
// node-task argument into a pair.
std::vector<int> effective_node_args(const EncoderConfig& cfg, const TaskInstance& inst);

// Loss = -sum log P(answer | E(G) || question) over the batch; gradients
// reach only the encoder parameters. The LM must be frozen. Returns the
// best-on-train snapshot (evaluated every cfg.eval_every steps).
TrainResult train_graphtoken(const std::vector<TaskInstance>& train_split,
                             const EncoderConfig& encoder_cfg, const LMParams& lm,
                             const OptimizerConfig& opt_cfg);

// Identical loop, but the prefix is one global trainable matrix with no
// access to the graph.
SoftPromptResult train_soft_prompt(const std::vector<TaskInstance>& train_split,
                                   const LMParams& lm, const OptimizerConfig& opt_cfg,
                                   int n_tokens);

// Greedy decode + canonical scoring, one record per instance.
EvalResult evaluate_graphtoken(const EncoderParams& params, const LMParams& lm,
                               const std::vector<TaskInstance>& instances);
EvalResult evaluate_soft_prompt(Tensor prompt, const LMParams& lm,
                                const std::vector<TaskInstance>& instances);

// Training log as CSV: step,loss,train_accuracy.
std::string training_log_csv(const std::vector<TrainLogEntry>& log);

}  // namespace graphtoken
