#include "graphtoken/lm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "graphtoken/rng.hpp"

namespace graphtoken {

namespace {

bool all_digits(const std::string& word) {
  return !word.empty() &&
         std::all_of(word.begin(), word.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool is_digit_token(const std::string& token) {
  return token.size() == 1 && std::isdigit(static_cast<unsigned char>(token[0]));
}

}  // namespace

Vocab Vocab::build(const std::vector<std::string>& words) {
  Vocab v;
  v.tokens_ = {"<pad>", "<bos>", "<eos>", "<sep>"};
  for (char c = '0'; c <= '9'; ++c) v.tokens_.push_back(std::string(1, c));
  std::set<std::string> extra;
  for (const auto& w : words) {
    if (!w.empty() && !all_digits(w)) extra.insert(w);
  }
  v.tokens_.insert(v.tokens_.end(), extra.begin(), extra.end());
  for (int i = 0; i < static_cast<int>(v.tokens_.size()); ++i) v.ids_[v.tokens_[i]] = i;
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) throw std::invalid_argument("out-of-vocabulary token: " + token);
  return it->second;
}

std::vector<int> tokenize(const Vocab& vocab, const std::string& text) {
  std::vector<int> out;
  std::istringstream is(text);
  std::string word;
  while (is >> word) {
    if (all_digits(word) && !vocab.contains(word)) {
      for (char c : word) out.push_back(vocab.id(std::string(1, c)));
    } else {
      out.push_back(vocab.id(word));
    }
  }
  return out;
}

std::string detokenize(const Vocab& vocab, const std::vector<int>& ids) {
  std::string out;
  bool prev_digit = false;
  for (int id : ids) {
    const std::string& tok = vocab.token(id);
    bool digit = is_digit_token(tok);
    if (!out.empty() && !(digit && prev_digit)) out += ' ';
    out += tok;
    prev_digit = digit;
  }
  return out;
}

void LMConfig::validate() const {
  if (d_lm < 1 || layers < 1 || context < 1) throw std::invalid_argument("bad LM config");
  if (heads < 1 || d_lm % heads != 0) {
    throw std::invalid_argument("heads must divide d_lm");
  }
}

Tensor LMParams::get(const std::string& name) const {
  for (const auto& [key, t] : tensors) {
    if (key == name) return t;
  }
  throw std::invalid_argument("missing LM parameter: " + name);
}

std::vector<Tensor> LMParams::trainable() const {
  std::vector<Tensor> out;
  for (const auto& [key, t] : tensors) out.push_back(t);
  return out;
}

std::int64_t LMParams::param_count() const {
  std::int64_t total = 0;
  for (const auto& [key, t] : tensors) total += t.size();
  return total;
}

void LMParams::freeze() {
  for (auto& [key, t] : tensors) t.set_requires_grad(false);
  frozen = true;
}

namespace {

Tensor init_weight(int rows, int cols, Rng& rng, double scale) {
  Tensor t = Tensor::zeros({rows, cols}, /*requires_grad=*/true);
  for (auto& v : t.values()) v = scale * rng.gaussian();
  return t;
}

Tensor init_vec(int n, double fill) {
  Tensor t = Tensor::zeros({n}, /*requires_grad=*/true);
  std::fill(t.values().begin(), t.values().end(), fill);
  return t;
}

std::string block_key(int i, const char* suffix) {
  return "block" + std::to_string(i) + "/" + suffix;
}

}  // namespace

LMParams init_lm_params(const LMConfig& cfg, const Vocab& vocab, std::uint64_t seed) {
  cfg.validate();
  Rng rng = Rng::derive(seed, "lm-init");
  LMParams p;
  p.config = cfg;
  p.vocab = vocab;
  int d = cfg.d_lm;
  double s = 1.0 / std::sqrt(static_cast<double>(d));
  auto push = [&p](std::string name, Tensor t) {
    p.tensors.emplace_back(std::move(name), std::move(t));
  };
  push("embed/tok", init_weight(vocab.size(), d, rng, s));
  push("embed/pos", init_weight(cfg.context, d, rng, s));
  for (int i = 0; i < cfg.layers; ++i) {
    push(block_key(i, "ln1_g"), init_vec(d, 1.0));
    push(block_key(i, "ln1_b"), init_vec(d, 0.0));
    for (const char* name : {"wq", "wk", "wv", "wo"}) {
      push(block_key(i, name), init_weight(d, d, rng, s));
    }
    for (const char* name : {"bq", "bk", "bv", "bo"}) {
      push(block_key(i, name), init_vec(d, 0.0));
    }
    push(block_key(i, "ln2_g"), init_vec(d, 1.0));
    push(block_key(i, "ln2_b"), init_vec(d, 0.0));
    push(block_key(i, "mlp_w1"), init_weight(d, 4 * d, rng, s));
    push(block_key(i, "mlp_b1"), init_vec(4 * d, 0.0));
    push(block_key(i, "mlp_w2"), init_weight(4 * d, d, rng, 1.0 / std::sqrt(4.0 * d)));
    push(block_key(i, "mlp_b2"), init_vec(d, 0.0));
  }
  push("final/ln_g", init_vec(d, 1.0));
  push("final/ln_b", init_vec(d, 0.0));
  push("out/w", init_weight(d, vocab.size(), rng, s));
  push("out/b", init_vec(vocab.size(), 0.0));
  return p;
}

Tensor embed_tokens(Tape& tape, const std::vector<int>& ids, const LMParams& params) {
  return gather_rows(tape, params.get("embed/tok"), ids);
}

namespace {

Tensor causal_mask(int seq) {
  Tensor m = Tensor::zeros({seq, seq});
  for (int i = 0; i < seq; ++i) {
    for (int j = i + 1; j < seq; ++j) m.values()[i * seq + j] = -1e30;
  }
  return m;
}

Tensor affine_norm(Tape& tape, Tensor x, const LMParams& p, const std::string& gain,
                   const std::string& bias) {
  return add_row(tape, mul_row(tape, layer_norm_rows(tape, x, 1e-5), p.get(gain)),
                 p.get(bias));
}

}  // namespace

Tensor forward_logits(Tape& tape, Tensor embeddings, const LMParams& params) {
  const LMConfig& cfg = params.config;
  int seq = embeddings.rows();
  if (seq > cfg.context) throw std::invalid_argument("sequence exceeds LM context");
  int d = cfg.d_lm, heads = cfg.heads, dh = d / heads;

  std::vector<int> positions(static_cast<std::size_t>(seq));
  for (int i = 0; i < seq; ++i) positions[i] = i;
  Tensor x = add(tape, embeddings, gather_rows(tape, params.get("embed/pos"), positions));
  Tensor mask = causal_mask(seq);

  for (int i = 0; i < cfg.layers; ++i) {
    Tensor normed = affine_norm(tape, x, params, block_key(i, "ln1_g"), block_key(i, "ln1_b"));
    Tensor q = add_row(tape, matmul(tape, normed, params.get(block_key(i, "wq"))),
                       params.get(block_key(i, "bq")));
    Tensor k = add_row(tape, matmul(tape, normed, params.get(block_key(i, "wk"))),
                       params.get(block_key(i, "bk")));
    Tensor v = add_row(tape, matmul(tape, normed, params.get(block_key(i, "wv"))),
                       params.get(block_key(i, "bv")));
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
    Tensor attn_out = add_row(tape, matmul(tape, cat, params.get(block_key(i, "wo"))),
                              params.get(block_key(i, "bo")));
    x = add(tape, x, attn_out);

    Tensor normed2 = affine_norm(tape, x, params, block_key(i, "ln2_g"), block_key(i, "ln2_b"));
    Tensor hidden = gelu(
        tape, add_row(tape, matmul(tape, normed2, params.get(block_key(i, "mlp_w1"))),
                      params.get(block_key(i, "mlp_b1"))));
    Tensor mlp_out = add_row(tape, matmul(tape, hidden, params.get(block_key(i, "mlp_w2"))),
                             params.get(block_key(i, "mlp_b2")));
    x = add(tape, x, mlp_out);
  }
  Tensor final_norm = affine_norm(tape, x, params, "final/ln_g", "final/ln_b");
  return add_row(tape, matmul(tape, final_norm, params.get("out/w")), params.get("out/b"));
}

EmbeddedQuery build_query(Tape& tape, Tensor prefix, const std::vector<int>& question_ids,
                          const std::vector<int>& answer_ids, const LMParams& params) {
  if (answer_ids.empty()) throw std::invalid_argument("answer must be nonempty");
  int prefix_rows = prefix.defined() ? prefix.rows() : 0;

  std::vector<int> text_ids = question_ids;
  text_ids.push_back(params.vocab.sep());
  int answer_start = prefix_rows + static_cast<int>(text_ids.size());
  int answer_end = answer_start + static_cast<int>(answer_ids.size());  // EOS excluded
  text_ids.insert(text_ids.end(), answer_ids.begin(), answer_ids.end());
  text_ids.push_back(params.vocab.eos());

  Tensor text_embed = embed_tokens(tape, text_ids, params);
  EmbeddedQuery q;
  q.prefix_rows = prefix_rows;
  q.embeddings = prefix.defined() ? concat_rows(tape, {prefix, text_embed}) : text_embed;

  int seq = q.embeddings.rows();
  if (seq > params.config.context) throw std::invalid_argument("sequence exceeds LM context");
  q.targets.assign(static_cast<std::size_t>(seq), params.vocab.pad());
  q.answer_mask.assign(static_cast<std::size_t>(seq), 0.0);
  for (int i = 0; i + 1 < seq; ++i) {
    int next = i + 1;
    if (next >= prefix_rows) q.targets[i] = text_ids[next - prefix_rows];
    if (next >= answer_start && next < answer_end) q.answer_mask[i] = 1.0;
  }
  return q;
}

Tensor answer_log_likelihood(Tape& tape, const EmbeddedQuery& query, const LMParams& params) {
  Tensor logits = forward_logits(tape, query.embeddings, params);
  Tensor ce = cross_entropy_with_logits(tape, logits, query.targets, query.answer_mask);
  return mul_scalar(tape, ce, -1.0);
}

std::vector<int> greedy_decode(Tensor prefix_embeddings, const LMParams& params, int max_len) {
  if (prefix_embeddings.rows() + max_len > params.config.context) {
    throw std::invalid_argument("prefix plus max_len exceeds LM context");
  }
  std::vector<int> out;
  Tape tape;
  tape.set_recording(false);
  Tensor seq = prefix_embeddings;
  for (int step = 0; step < max_len; ++step) {
    Tensor logits = forward_logits(tape, seq, params);
    int last = logits.rows() - 1;
    int vocab = logits.cols();
    int best = 0;
    for (int j = 1; j < vocab; ++j) {
      if (logits.values()[last * vocab + j] > logits.values()[last * vocab + best]) best = j;
    }
    if (best == params.vocab.eos()) break;
    out.push_back(best);
    seq = concat_rows(tape, {seq, embed_tokens(tape, {best}, params)});
  }
  return out;
}

PretrainResult pretrain_lm(const std::vector<std::pair<std::string, std::string>>& corpus,
                           const LMConfig& cfg, const Vocab& vocab,
                           const PretrainConfig& pretrain_cfg) {
  if (corpus.empty()) throw std::invalid_argument("pretraining corpus is empty");
  LMParams params = init_lm_params(cfg, vocab, pretrain_cfg.seed);

  // pre-tokenized question+SEP+answer+EOS sequences with full next-token loss
  std::vector<std::vector<int>> sequences;
  sequences.reserve(corpus.size());
  for (const auto& [question, answer] : corpus) {
    std::vector<int> ids = tokenize(vocab, question);
    ids.push_back(vocab.sep());
    for (int id : tokenize(vocab, answer)) ids.push_back(id);
    ids.push_back(vocab.eos());
    if (static_cast<int>(ids.size()) > cfg.context) {
      throw std::invalid_argument("corpus sequence exceeds LM context");
    }
    sequences.push_back(std::move(ids));
  }

  OptimizerConfig opt;
  opt.lr = pretrain_cfg.lr;
  opt.batch_size = pretrain_cfg.batch_size;
  opt.max_steps = pretrain_cfg.steps;
  Lion lion(params.trainable(), opt);
  Rng batch_rng = Rng::derive(pretrain_cfg.seed, "lm-pretrain/batches");

  PretrainResult result;
  for (int step = 0; step < pretrain_cfg.steps; ++step) {
    lion.zero_grads();
    Tape tape;
    double step_loss = 0.0;
    for (int b = 0; b < pretrain_cfg.batch_size; ++b) {
      const auto& ids = sequences[static_cast<std::size_t>(
          batch_rng.uniform_int(0, static_cast<std::int64_t>(sequences.size()) - 1))];
      int seq = static_cast<int>(ids.size());
      int max_prefix = std::min(pretrain_cfg.max_prefix, cfg.context - seq);
      int prefix = max_prefix > 0
                       ? static_cast<int>(batch_rng.uniform_int(0, max_prefix))
                       : 0;
      Tensor embedded = embed_tokens(tape, ids, params);
      if (prefix > 0) {
        embedded = concat_rows(tape, {Tensor::zeros({prefix, cfg.d_lm}), embedded});
      }
      std::vector<int> targets(static_cast<std::size_t>(prefix + seq), vocab.pad());
      std::vector<double> mask(static_cast<std::size_t>(prefix + seq), 0.0);
      if (prefix > 0) {
        targets[prefix - 1] = ids[0];  // the transition out of the prefix
        mask[prefix - 1] = 1.0;
      }
      for (int i = 0; i + 1 < seq; ++i) {
        targets[prefix + i] = ids[i + 1];
        mask[prefix + i] = 1.0;
      }
      Tensor loss = cross_entropy_with_logits(
          tape, forward_logits(tape, embedded, params), targets, mask);
      Tensor scaled = mul_scalar(tape, loss, 1.0 / pretrain_cfg.batch_size);
      tape.backward(scaled);
      step_loss += scaled.item();
    }
    if (!std::isfinite(step_loss)) throw std::runtime_error("LM pretraining diverged");
    result.loss_curve.push_back(step_loss);
    lion.step();
    tape.clear();
  }
  params.freeze();
  result.params = std::move(params);
  return result;
}

}  // namespace graphtoken
