#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "graphtoken/tensor.hpp"

namespace graphtoken {

struct OptimizerConfig {
  double lr = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double weight_decay = 0.0;
  int batch_size = 8;
  int max_steps = 5000;
  int eval_every = 250;  // model-selection cadence
  std::uint64_t seed = 0;

  void validate() const {
    if (lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
      throw std::invalid_argument("betas must lie in [0, 1)");
    }
    if (batch_size < 1 || max_steps < 0 || eval_every < 1) {
      throw std::invalid_argument("bad optimizer schedule");
    }
  }
};

// Sign-momentum update: u = sign(b1*m + (1-b1)*g); p -= lr*(u + wd*p);
// m = b2*m + (1-b2)*g. Per-coordinate step magnitude is exactly lr.
class Lion {
 public:
  Lion(std::vector<Tensor> params, OptimizerConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    for (Tensor& p : params_) {
      momentum_.emplace_back(p.values().size(), 0.0);
    }
  }

  // Consumes current gradients; throws std::runtime_error on non-finite ones.
  void step() {
    for (std::size_t t = 0; t < params_.size(); ++t) {
      Tensor& p = params_[t];
      auto& m = momentum_[t];
      auto& g = p.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i])) {
          throw std::runtime_error("non-finite gradient in optimizer step");
        }
        double blended = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
        double u = blended > 0.0 ? 1.0 : blended < 0.0 ? -1.0 : 0.0;
        p.values()[i] -= cfg_.lr * (u + cfg_.weight_decay * p.values()[i]);
        m[i] = cfg_.beta2 * m[i] + (1.0 - cfg_.beta2) * g[i];
      }
    }
  }

  void zero_grads() {
    for (Tensor& p : params_) {
      p.grad();
      p.zero_grad();
    }
  }

  const std::vector<std::vector<double>>& momentum() const { return momentum_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> momentum_;
  OptimizerConfig cfg_;
};

}  // namespace graphtoken
