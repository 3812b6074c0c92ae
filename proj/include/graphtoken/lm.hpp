#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "graphtoken/optimizer.hpp"
#include "graphtoken/tensor.hpp"

namespace graphtoken {

// Word-level vocabulary over the task-template grammar. Numbers are handled
// as digit tokens, so the vocabulary stays fixed regardless of graph size.
class Vocab {
 public:
  Vocab() = default;
  // markers + digits 0-9 + the given words (deduplicated, sorted)
  static Vocab build(const std::vector<std::string>& words);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  int id(const std::string& token) const;  // throws on out-of-vocabulary
  bool contains(const std::string& token) const { return ids_.count(token) > 0; }

  int pad() const { return pad_; }
  int bos() const { return bos_; }
  int eos() const { return eos_; }
  int sep() const { return sep_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
  int pad_ = 0, bos_ = 1, eos_ = 2, sep_ = 3;
};

// Splits on whitespace; an all-digit word becomes one token per digit.
// Throws std::invalid_argument on out-of-vocabulary words.
std::vector<int> tokenize(const Vocab& vocab, const std::string& text);
// Inverse on template-generated text: words joined by spaces, runs of digit
// tokens joined without them.
std::string detokenize(const Vocab& vocab, const std::vector<int>& ids);

struct LMConfig {
  int d_lm = 64;
  int layers = 4;
  int heads = 4;
  int context = 128;

  void validate() const;
};

// Decoder-only transformer (pre-LN blocks, learned absolute positions).
struct LMParams {
  LMConfig config;
  Vocab vocab;
  std::vector<std::pair<std::string, Tensor>> tensors;
  bool frozen = false;

  Tensor get(const std::string& name) const;
  std::vector<Tensor> trainable() const;
  std::int64_t param_count() const;
  void freeze();  // clears requires_grad on every tensor, sets the flag
};

LMParams init_lm_params(const LMConfig& cfg, const Vocab& vocab, std::uint64_t seed);

// Token-embedding rows for the given ids (no positions; those are added
// inside forward_logits so soft prefix rows receive them too).
Tensor embed_tokens(Tape& tape, const std::vector<int>& ids, const LMParams& params);

// Causal logits over the whole sequence. Throws on context overflow.
Tensor forward_logits(Tape& tape, Tensor embeddings, const LMParams& params);

// Prefix soft rows followed by the embedded question, SEP, answer, EOS.
// Loss positions cover exactly the answer tokens plus EOS.
struct EmbeddedQuery {
  Tensor embeddings;              // seq x d_lm
  std::vector<int> targets;       // next-token id per position
  std::vector<double> answer_mask;
  int prefix_rows = 0;
};

// `prefix` may be undefined (no soft rows).
EmbeddedQuery build_query(Tape& tape, Tensor prefix, const std::vector<int>& question_ids,
                          const std::vector<int>& answer_ids, const LMParams& params);

// Sum over answer positions of log P(token | everything before it).
// Differentiable with respect to the prefix rows even when params are frozen.
Tensor answer_log_likelihood(Tape& tape, const EmbeddedQuery& query, const LMParams& params);

// Argmax decoding until EOS or max_len; ties break toward the lowest id.
std::vector<int> greedy_decode(Tensor prefix_embeddings, const LMParams& params, int max_len);

struct PretrainConfig {
  int steps = 3000;
  int batch_size = 32;
  double lr = 1e-3;
  // Each sample is trained behind a uniform-length prefix of zero rows so the
  // learned absolute positions stay usable once soft tokens are prepended.
  int max_prefix = 24;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  LMParams params;                // frozen
  std::vector<double> loss_curve; // mean per logged step
};

// Next-token pretraining on question+SEP+answer text (no graph information),
// then freeze. Throws std::runtime_error if the loss turns non-finite.
PretrainResult pretrain_lm(const std::vector<std::pair<std::string, std::string>>& corpus,
                           const LMConfig& cfg, const Vocab& vocab,
                           const PretrainConfig& pretrain_cfg);

}  // namespace graphtoken
