#include "graphtoken/trainer.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace graphtoken {

namespace {

constexpr int kMaxAnswerTokens = 48;

std::vector<int> question_with_sep(const TaskInstance& inst, const LMParams& lm) {
  std::vector<int> ids = tokenize(lm.vocab, inst.question);
  ids.push_back(lm.vocab.sep());
  return ids;
}

bool fits_context(const TaskInstance& inst, int prefix_rows, const LMParams& lm) {
  int text = static_cast<int>(tokenize(lm.vocab, inst.question).size()) + 1 +
             static_cast<int>(tokenize(lm.vocab, inst.answer).size()) + 1;
  return prefix_rows + text <= lm.config.context;
}

EncoderParams clone_params(const EncoderParams& params) {
  EncoderParams copy;
  copy.config = params.config;
  for (const auto& [name, t] : params.tensors) {
    copy.tensors.emplace_back(
        name, Tensor::from_values(t.shape(), t.values(), t.requires_grad()));
  }
  return copy;
}

Tensor clone_tensor(const Tensor& t) {
  return Tensor::from_values(t.shape(), t.values(), t.requires_grad());
}

std::string decode_answer(Tensor soft_rows, const TaskInstance& inst, const LMParams& lm) {
  Tape tape;
  tape.set_recording(false);
  Tensor prefix = concat_rows(
      tape, {soft_rows, embed_tokens(tape, question_with_sep(inst, lm), lm)});
  int budget = std::min(kMaxAnswerTokens, lm.config.context - prefix.rows());
  if (budget <= 0) return "";
  return detokenize(lm.vocab, greedy_decode(prefix, lm, budget));
}

EvalResult evaluate_with(const std::vector<TaskInstance>& instances,
                         const std::function<Tensor(Tape&, const TaskInstance&)>& soft_rows_fn,
                         const LMParams& lm) {
  EvalResult result;
  std::vector<std::string> predictions;
  for (const auto& inst : instances) {
    Tape tape;
    tape.set_recording(false);
    std::string prediction = decode_answer(soft_rows_fn(tape, inst), inst, lm);
    predictions.push_back(prediction);
    result.records.push_back({prediction, inst.answer, false});
  }
  result.accuracy = score(predictions, instances);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    std::vector<std::string> one{predictions[i]};
    std::vector<TaskInstance> inst_one{instances[i]};
    result.records[i].correct = score(one, inst_one) == 1.0;
  }
  return result;
}

}  // namespace

std::vector<int> effective_node_args(const EncoderConfig& cfg, const TaskInstance& inst) {
  bool endpoint = cfg.readout == ReadoutMode::endpoint_pair ||
                  cfg.readout == ReadoutMode::endpoint_pair_plus_graph;
  if (!endpoint) return inst.node_args;
  if (inst.node_args.size() == 2) return inst.node_args;
  if (inst.node_args.size() == 1) return {inst.node_args[0], inst.node_args[0]};
  throw std::invalid_argument("endpoint readout on a task without node arguments");
}

TrainResult train_graphtoken(const std::vector<TaskInstance>& train_split,
                             const EncoderConfig& encoder_cfg, const LMParams& lm,
                             const OptimizerConfig& opt_cfg) {
  if (train_split.empty()) throw std::invalid_argument("empty training split");
  if (!lm.frozen) throw std::invalid_argument("LM must be frozen for GraphToken training");
  opt_cfg.validate();
  encoder_cfg.validate();

  EncoderParams params = init_encoder_params(encoder_cfg, opt_cfg.seed);
  Lion lion(params.trainable(), opt_cfg);
  Rng batch_rng = Rng::derive(opt_cfg.seed, "train/batches");

  TrainResult result;
  auto evaluate_train = [&](int step) {
    EvalResult eval = evaluate_graphtoken(params, lm, train_split);
    result.log.push_back({step, std::nan(""), eval.accuracy});
    if (eval.accuracy > result.best_train_accuracy) {
      result.best_train_accuracy = eval.accuracy;
      result.best_step = step;
      result.params = clone_params(params);
    }
  };

  for (int step = 1; step <= opt_cfg.max_steps; ++step) {
    lion.zero_grads();
    Tape tape;
    double step_loss = 0.0;
    int used = 0;
    for (int b = 0; b < opt_cfg.batch_size; ++b) {
      const TaskInstance& inst = train_split[static_cast<std::size_t>(
          batch_rng.uniform_int(0, static_cast<std::int64_t>(train_split.size()) - 1))];
      int prefix_rows = encoder_cfg.tokens_out(inst.graph.node_count());
      if (!fits_context(inst, prefix_rows, lm)) {
        ++result.skipped_instances;
        continue;
      }
      Tensor tokens = encode(tape, inst.graph, params, effective_node_args(encoder_cfg, inst));
      EmbeddedQuery query = build_query(tape, tokens, tokenize(lm.vocab, inst.question),
                                        tokenize(lm.vocab, inst.answer), lm);
      Tensor loss = mul_scalar(tape, answer_log_likelihood(tape, query, lm),
                               -1.0 / opt_cfg.batch_size);
      tape.backward(loss);
      step_loss += loss.item();
      ++used;
    }
    if (used == 0) throw std::runtime_error("entire batch exceeded the LM context");
    if (!std::isfinite(step_loss)) {
      throw std::runtime_error("non-finite training loss at step " + std::to_string(step));
    }
    lion.step();
    result.log.push_back({step, step_loss, -1.0});
    if (step % opt_cfg.eval_every == 0 || step == opt_cfg.max_steps) evaluate_train(step);
  }
  if (result.best_step < 0) {
    // zero training steps: the initial parameters are the checkpoint
    evaluate_train(0);
  }
  return result;
}

SoftPromptResult train_soft_prompt(const std::vector<TaskInstance>& train_split,
                                   const LMParams& lm, const OptimizerConfig& opt_cfg,
                                   int n_tokens) {
  if (train_split.empty()) throw std::invalid_argument("empty training split");
  if (!lm.frozen) throw std::invalid_argument("LM must be frozen for soft-prompt tuning");
  if (n_tokens < 1) throw std::invalid_argument("soft prompt needs at least one token");
  opt_cfg.validate();

  Rng init_rng = Rng::derive(opt_cfg.seed, "soft-prompt-init");
  Tensor prompt = Tensor::zeros({n_tokens, lm.config.d_lm}, /*requires_grad=*/true);
  double s = 1.0 / std::sqrt(static_cast<double>(lm.config.d_lm));
  for (auto& v : prompt.values()) v = s * init_rng.gaussian();

  Lion lion({prompt}, opt_cfg);
  Rng batch_rng = Rng::derive(opt_cfg.seed, "train/batches");

  SoftPromptResult result;
  auto evaluate_train = [&](int step) {
    EvalResult eval = evaluate_soft_prompt(prompt, lm, train_split);
    result.log.push_back({step, std::nan(""), eval.accuracy});
    if (eval.accuracy > result.best_train_accuracy) {
      result.best_train_accuracy = eval.accuracy;
      result.best_step = step;
      result.prompt = clone_tensor(prompt);
    }
  };

  for (int step = 1; step <= opt_cfg.max_steps; ++step) {
    lion.zero_grads();
    Tape tape;
    double step_loss = 0.0;
    for (int b = 0; b < opt_cfg.batch_size; ++b) {
      const TaskInstance& inst = train_split[static_cast<std::size_t>(
          batch_rng.uniform_int(0, static_cast<std::int64_t>(train_split.size()) - 1))];
      if (!fits_context(inst, n_tokens, lm)) continue;
      EmbeddedQuery query = build_query(tape, prompt, tokenize(lm.vocab, inst.question),
                                        tokenize(lm.vocab, inst.answer), lm);
      Tensor loss = mul_scalar(tape, answer_log_likelihood(tape, query, lm),
                               -1.0 / opt_cfg.batch_size);
      tape.backward(loss);
      step_loss += loss.item();
    }
    if (!std::isfinite(step_loss)) {
      throw std::runtime_error("non-finite training loss at step " + std::to_string(step));
    }
    lion.step();
    result.log.push_back({step, step_loss, -1.0});
    if (step % opt_cfg.eval_every == 0 || step == opt_cfg.max_steps) evaluate_train(step);
  }
  if (result.best_step < 0) evaluate_train(0);
  return result;
}

EvalResult evaluate_graphtoken(const EncoderParams& params, const LMParams& lm,
                               const std::vector<TaskInstance>& instances) {
  return evaluate_with(
      instances,
      [&](Tape& tape, const TaskInstance& inst) {
        return encode(tape, inst.graph, params, effective_node_args(params.config, inst));
      },
      lm);
}

EvalResult evaluate_soft_prompt(Tensor prompt, const LMParams& lm,
                                const std::vector<TaskInstance>& instances) {
  return evaluate_with(
      instances, [&](Tape&, const TaskInstance&) { return prompt; }, lm);
}

std::string training_log_csv(const std::vector<TrainLogEntry>& log) {
  std::ostringstream out;
  out << "step,loss,train_accuracy\n";
  for (const auto& entry : log) {
    out << entry.step << ",";
    if (std::isnan(entry.loss)) {
      out << "";
    } else {
      out << entry.loss;
    }
    out << ",";
    if (entry.train_accuracy >= 0.0) out << entry.train_accuracy;
    out << "\n";
  }
  return out.str();
}

}  // namespace graphtoken
