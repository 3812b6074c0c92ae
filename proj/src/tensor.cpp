#include "graphtoken/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphtoken {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void check(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::int64_t element_count(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    check(d >= 0, "negative dimension");
    n *= d;
  }
  return n;
}

bool track(const Tape& tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape.recording()) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->values.assign(static_cast<std::size_t>(element_count(d->shape)), 0.0);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values,
                           bool requires_grad) {
  check(element_count(shape) == static_cast<std::int64_t>(values.size()),
        "value count does not match shape");
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->values = std::move(values);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from_values({}, {v}, requires_grad);
}

int Tensor::rows() const {
  check(rank() == 2, "rows() requires a matrix");
  return data_->shape[0];
}

int Tensor::cols() const {
  check(rank() == 2, "cols() requires a matrix");
  return data_->shape[1];
}

double Tensor::item() const {
  check(size() == 1 && rank() == 0, "item() requires a scalar");
  return data_->values[0];
}

std::vector<double>& Tensor::grad() {
  if (data_->grad.empty()) data_->grad.assign(data_->values.size(), 0.0);
  return data_->grad;
}

void Tensor::zero_grad() {
  std::fill(data_->grad.begin(), data_->grad.end(), 0.0);
}

void Tape::backward(Tensor loss) {
  if (!loss.defined() || loss.rank() != 0) {
    throw std::invalid_argument("backward expects a scalar loss");
  }
  loss.grad()[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

Tensor matmul(Tape& tape, Tensor a, Tensor b) {
  check(a.rank() == 2 && b.rank() == 2, "matmul requires matrices");
  check(a.cols() == b.rows(), "matmul: inner dimensions differ");
  int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros({m, n});
  ConstMatMap ma(a.values().data(), m, k), mb(b.values().data(), k, n);
  MatMap(out.values().data(), m, n) = ma * mb;
  if (track(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape.record([a, b, out]() mutable {
      ConstMatMap go(out.grad().data(), out.rows(), out.cols());
      ConstMatMap ma(a.values().data(), a.rows(), a.cols());
      ConstMatMap mb(b.values().data(), b.rows(), b.cols());
      if (a.requires_grad()) MatMap(a.grad().data(), a.rows(), a.cols()) += go * mb.transpose();
      if (b.requires_grad()) MatMap(b.grad().data(), b.rows(), b.cols()) += ma.transpose() * go;
    });
  }
  return out;
}

Tensor transpose(Tape& tape, Tensor a) {
  check(a.rank() == 2, "transpose requires a matrix");
  int m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros({n, m});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.values()[j * m + i] = a.values()[i * n + j];
  }
  if (track(tape, {&a})) {
    out.set_requires_grad(true);
    tape.record([a, out, m, n]() mutable {
      if (!a.requires_grad()) return;
      auto& ga = a.grad();
      const auto& go = out.grad();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) ga[i * n + j] += go[j * m + i];
      }
    });
  }
  return out;
}

namespace {

Tensor elementwise_binary(Tape& tape, Tensor a, Tensor b, int mode) {
  check(a.shape() == b.shape(), "elementwise op: shape mismatch");
  Tensor out = Tensor::zeros(a.shape());
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    double x = a.values()[i], y = b.values()[i];
    ov[i] = mode == 0 ? x + y : mode == 1 ? x - y : x * y;
  }
  if (track(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape.record([a, b, out, mode]() mutable {
      const auto& go = out.grad();
      for (std::size_t i = 0; i < go.size(); ++i) {
        if (a.requires_grad()) {
          a.grad()[i] += mode == 2 ? go[i] * b.values()[i] : go[i];
        }
        if (b.requires_grad()) {
          b.grad()[i] += mode == 0   ? go[i]
                         : mode == 1 ? -go[i]
                                     : go[i] * a.values()[i];
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(Tape& tape, Tensor a, Tensor b) { return elementwise_binary(tape, a, b, 0); }
Tensor sub(Tape& tape, Tensor a, Tensor b) { return elementwise_binary(tape, a, b, 1); }
Tensor mul(Tape& tape, Tensor a, Tensor b) { return elementwise_binary(tape, a, b, 2); }

Tensor add_scalar(Tape& tape, Tensor a, double s) {
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.values().size(); ++i) out.values()[i] = a.values()[i] + s;
  if (track(tape, {&a})) {
    out.set_requires_grad(true);
    tape.record([a, out]() mutable {
      if (!a.requires_grad()) return;
      for (std::size_t i = 0; i < a.grad().size(); ++i) a.grad()[i] += out.grad()[i];
    });
  }
  return out;
}

Tensor mul_scalar(Tape& tape, Tensor a, double s) {
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.values().size(); ++i) out.values()[i] = a.values()[i] * s;
  if (track(tape, {&a})) {
    out.set_requires_grad(true);
    tape.record([a, out, s]() mutable {
      if (!a.requires_grad()) return;
      for (std::size_t i = 0; i < a.grad().size(); ++i) a.grad()[i] += s * out.grad()[i];
    });
  }
  return out;
}

Tensor scale(Tape& tape, Tensor x, Tensor s) {
  check(s.rank() == 0, "scale expects a rank-0 multiplier");
  double sv = s.values()[0];
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < out.values().size(); ++i) out.values()[i] = x.values()[i] * sv;
  if (track(tape, {&x, &s})) {
    out.set_requires_grad(true);
    tape.record([x, s, out]() mutable {
      const auto& go = out.grad();
      double sv = s.values()[0];
      for (std::size_t i = 0; i < go.size(); ++i) {
        if (x.requires_grad()) x.grad()[i] += go[i] * sv;
        if (s.requires_grad()) s.grad()[0] += go[i] * x.values()[i];
      }
    });
  }
  return out;
}

namespace {

Tensor rowwise_binary(Tape& tape, Tensor x, Tensor row, bool multiply) {
  check(x.rank() == 2 && row.rank() == 1, "row op expects matrix and vector");
  check(x.cols() == static_cast<int>(row.values().size()), "row op: width mismatch");
  int m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double v = x.values()[i * n + j];
      out.values()[i * n + j] = multiply ? v * row.values()[j] : v + row.values()[j];
    }
  }
  if (track(tape, {&x, &row})) {
    out.set_requires_grad(true);
    tape.record([x, row, out, m, n, multiply]() mutable {
      const auto& go = out.grad();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          double g = go[i * n + j];
          if (x.requires_grad()) {
            x.grad()[i * n + j] += multiply ? g * row.values()[j] : g;
          }
          if (row.requires_grad()) {
            row.grad()[j] += multiply ? g * x.values()[i * n + j] : g;
          }
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor add_row(Tape& tape, Tensor x, Tensor row) { return rowwise_binary(tape, x, row, false); }
Tensor mul_row(Tape& tape, Tensor x, Tensor row) { return rowwise_binary(tape, x, row, true); }

Tensor relu(Tape& tape, Tensor x) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    out.values()[i] = std::max(x.values()[i], 0.0);
  }
  if (track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out]() mutable {
      if (!x.requires_grad()) return;
      for (std::size_t i = 0; i < x.grad().size(); ++i) {
        if (x.values()[i] > 0.0) x.grad()[i] += out.grad()[i];
      }
    });
  }
  return out;
}

Tensor gelu(Tape& tape, Tensor x) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    double v = x.values()[i];
    out.values()[i] = v * 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
  }
  if (track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out]() mutable {
      if (!x.requires_grad()) return;
      for (std::size_t i = 0; i < x.grad().size(); ++i) {
        double v = x.values()[i];
        double phi = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
        double density = std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
        x.grad()[i] += out.grad()[i] * (phi + v * density);
      }
    });
  }
  return out;
}

Tensor softmax_rows(Tape& tape, Tensor x) {
  check(x.rank() == 2, "softmax_rows requires a matrix");
  int m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i) {
    double mx = -HUGE_VAL;
    for (int j = 0; j < n; ++j) mx = std::max(mx, x.values()[i * n + j]);
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      double e = std::exp(x.values()[i * n + j] - mx);
      out.values()[i * n + j] = e;
      total += e;
    }
    for (int j = 0; j < n; ++j) out.values()[i * n + j] /= total;
  }
  if (track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out, m, n]() mutable {
      if (!x.requires_grad()) return;
      const auto& y = out.values();
      const auto& go = out.grad();
      for (int i = 0; i < m; ++i) {
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += y[i * n + j] * go[i * n + j];
        for (int j = 0; j < n; ++j) {
          x.grad()[i * n + j] += y[i * n + j] * (go[i * n + j] - dot);
        }
      }
    });
  }
  return out;
}

Tensor layer_norm_rows(Tape& tape, Tensor x, double eps) {
  check(x.rank() == 2, "layer_norm_rows requires a matrix");
  check(eps > 0.0, "layer_norm eps must be positive");
  int m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros({m, n});
  std::vector<double> inv_std(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += x.values()[i * n + j];
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = x.values()[i * n + j] - mean;
      var += d * d;
    }
    var /= n;
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < n; ++j) {
      out.values()[i * n + j] = (x.values()[i * n + j] - mean) * inv_std[i];
    }
  }
  if (track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out, inv_std, m, n]() mutable {
      if (!x.requires_grad()) return;
      const auto& y = out.values();
      const auto& go = out.grad();
      for (int i = 0; i < m; ++i) {
        double mean_g = 0.0, mean_gy = 0.0;
        for (int j = 0; j < n; ++j) {
          mean_g += go[i * n + j];
          mean_gy += go[i * n + j] * y[i * n + j];
        }
        mean_g /= n;
        mean_gy /= n;
        for (int j = 0; j < n; ++j) {
          x.grad()[i * n + j] +=
              inv_std[i] * (go[i * n + j] - mean_g - y[i * n + j] * mean_gy);
        }
      }
    });
  }
  return out;
}

Tensor gather_rows(Tape& tape, Tensor table, const std::vector<int>& indices) {
  check(table.rank() == 2, "gather_rows requires a matrix table");
  int n = table.cols();
  for (int idx : indices) {
    check(idx >= 0 && idx < table.rows(), "gather_rows: index out of range");
  }
  Tensor out = Tensor::zeros({static_cast<int>(indices.size()), n});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(table.values().begin() + indices[i] * n, n,
                out.values().begin() + static_cast<std::int64_t>(i) * n);
  }
  if (track(tape, {&table})) {
    out.set_requires_grad(true);
    tape.record([table, out, indices, n]() mutable {
      if (!table.requires_grad()) return;
      for (std::size_t i = 0; i < indices.size(); ++i) {
        for (int j = 0; j < n; ++j) {
          table.grad()[indices[i] * n + j] += out.grad()[i * n + j];
        }
      }
    });
  }
  return out;
}

Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts) {
  check(!parts.empty(), "concat_rows of nothing");
  int n = parts[0].cols();
  int total_rows = 0;
  for (const auto& p : parts) {
    check(p.rank() == 2 && p.cols() == n, "concat_rows: width mismatch");
    total_rows += p.rows();
  }
  Tensor out = Tensor::zeros({total_rows, n});
  std::int64_t offset = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    std::copy(p.values().begin(), p.values().end(), out.values().begin() + offset);
    offset += p.size();
    any_grad = any_grad || p.requires_grad();
  }
  if (tape.recording() && any_grad) {
    out.set_requires_grad(true);
    tape.record([parts = parts, out]() mutable {
      std::int64_t off = 0;
      for (auto& p : parts) {
        if (p.requires_grad()) {
          for (std::int64_t i = 0; i < p.size(); ++i) p.grad()[i] += out.grad()[off + i];
        }
        off += p.size();
      }
    });
  }
  return out;
}

Tensor concat_cols(Tape& tape, Tensor a, Tensor b) {
  check(a.rank() == 2 && b.rank() == 2 && a.rows() == b.rows(),
        "concat_cols: row mismatch");
  int m = a.rows(), p = a.cols(), q = b.cols();
  Tensor out = Tensor::zeros({m, p + q});
  for (int i = 0; i < m; ++i) {
    std::copy_n(a.values().begin() + i * p, p, out.values().begin() + i * (p + q));
    std::copy_n(b.values().begin() + i * q, q, out.values().begin() + i * (p + q) + p);
  }
  if (track(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape.record([a, b, out, m, p, q]() mutable {
      const auto& go = out.grad();
      for (int i = 0; i < m; ++i) {
        if (a.requires_grad()) {
          for (int j = 0; j < p; ++j) a.grad()[i * p + j] += go[i * (p + q) + j];
        }
        if (b.requires_grad()) {
          for (int j = 0; j < q; ++j) b.grad()[i * q + j] += go[i * (p + q) + p + j];
        }
      }
    });
  }
  return out;
}

Tensor slice_rows(Tape& tape, Tensor x, int begin, int count) {
  check(x.rank() == 2, "slice_rows requires a matrix");
  check(begin >= 0 && count >= 0 && begin + count <= x.rows(),
        "slice_rows: range out of bounds");
  int n = x.cols();
  Tensor out = Tensor::zeros({count, n});
  std::copy_n(x.values().begin() + static_cast<std::int64_t>(begin) * n,
              static_cast<std::int64_t>(count) * n, out.values().begin());
  if (track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out, begin, count, n]() mutable {
      if (!x.requires_grad()) return;
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(count) * n; ++i) {
        x.grad()[static_cast<std::int64_t>(begin) * n + i] += out.grad()[i];
      }
    });
  }
  return out;
}

Tensor slice_cols(Tape& tape, Tensor x, int begin, int count) {
  check(x.rank() == 2, "slice_cols requires a matrix");
  check(begin >= 0 && count >= 0 && begin + count <= x.cols(),
        "slice_cols: range out of bounds");
  int m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros({m, count});
  for (int i = 0; i < m; ++i) {
    std::copy_n(x.values().begin() + static_cast<std::int64_t>(i) * n + begin, count,
                out.values().begin() + static_cast<std::int64_t>(i) * count);
  }
  if (track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out, begin, count, m, n]() mutable {
      if (!x.requires_grad()) return;
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < count; ++j) {
          x.grad()[static_cast<std::int64_t>(i) * n + begin + j] +=
              out.grad()[static_cast<std::int64_t>(i) * count + j];
        }
      }
    });
  }
  return out;
}

namespace {

void check_segments(const Tensor& values, const std::vector<int>& ids, int num_segments) {
  check(values.rank() == 2, "segment op requires a matrix");
  check(static_cast<int>(ids.size()) == values.rows(), "segment ids: length mismatch");
  check(num_segments >= 0, "negative segment count");
  for (int s : ids) check(s >= 0 && s < num_segments, "segment id out of range");
}

}  // namespace

Tensor segment_sum(Tape& tape, Tensor values, const std::vector<int>& segment_ids,
                   int num_segments) {
  check_segments(values, segment_ids, num_segments);
  int n = values.cols();
  Tensor out = Tensor::zeros({num_segments, n});
  for (std::size_t i = 0; i < segment_ids.size(); ++i) {
    for (int j = 0; j < n; ++j) {
      out.values()[segment_ids[i] * n + j] += values.values()[i * n + j];
    }
  }
  if (track(tape, {&values})) {
    out.set_requires_grad(true);
    tape.record([values, out, segment_ids, n]() mutable {
      if (!values.requires_grad()) return;
      for (std::size_t i = 0; i < segment_ids.size(); ++i) {
        for (int j = 0; j < n; ++j) {
          values.grad()[i * n + j] += out.grad()[segment_ids[i] * n + j];
        }
      }
    });
  }
  return out;
}

Tensor segment_mean(Tape& tape, Tensor values, const std::vector<int>& segment_ids,
                    int num_segments) {
  check_segments(values, segment_ids, num_segments);
  int n = values.cols();
  std::vector<double> count(static_cast<std::size_t>(num_segments), 0.0);
  for (int s : segment_ids) count[s] += 1.0;
  Tensor out = Tensor::zeros({num_segments, n});
  for (std::size_t i = 0; i < segment_ids.size(); ++i) {
    for (int j = 0; j < n; ++j) {
      out.values()[segment_ids[i] * n + j] +=
          values.values()[i * n + j] / count[segment_ids[i]];
    }
  }
  if (track(tape, {&values})) {
    out.set_requires_grad(true);
    tape.record([values, out, segment_ids, count, n]() mutable {
      if (!values.requires_grad()) return;
      for (std::size_t i = 0; i < segment_ids.size(); ++i) {
        for (int j = 0; j < n; ++j) {
          values.grad()[i * n + j] +=
              out.grad()[segment_ids[i] * n + j] / count[segment_ids[i]];
        }
      }
    });
  }
  return out;
}

Tensor segment_max(Tape& tape, Tensor values, const std::vector<int>& segment_ids,
                   int num_segments) {
  check_segments(values, segment_ids, num_segments);
  int n = values.cols();
  Tensor out = Tensor::zeros({num_segments, n});
  std::vector<std::int64_t> arg(static_cast<std::size_t>(num_segments) * n, -1);
  for (std::size_t i = 0; i < segment_ids.size(); ++i) {
    for (int j = 0; j < n; ++j) {
      std::int64_t slot = static_cast<std::int64_t>(segment_ids[i]) * n + j;
      double v = values.values()[i * n + j];
      if (arg[slot] < 0 || v > out.values()[slot]) {
        out.values()[slot] = v;
        arg[slot] = static_cast<std::int64_t>(i);
      }
    }
  }
  // empty segments keep the 0 sentinel
  if (track(tape, {&values})) {
    out.set_requires_grad(true);
    tape.record([values, out, arg, n]() mutable {
      if (!values.requires_grad()) return;
      for (std::size_t slot = 0; slot < arg.size(); ++slot) {
        if (arg[slot] >= 0) {
          values.grad()[arg[slot] * n + static_cast<std::int64_t>(slot % n)] +=
              out.grad()[slot];
        }
      }
    });
  }
  return out;
}

Tensor sum_all(Tape& tape, Tensor x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  Tensor out = Tensor::scalar(total);
  if (track(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record([x, out]() mutable {
      if (!x.requires_grad()) return;
      for (std::size_t i = 0; i < x.grad().size(); ++i) x.grad()[i] += out.grad()[0];
    });
  }
  return out;
}

Tensor cross_entropy_with_logits(Tape& tape, Tensor logits,
                                 const std::vector<int>& targets,
                                 const std::vector<double>& mask) {
  check(logits.rank() == 2, "cross entropy requires a logits matrix");
  int m = logits.rows(), v = logits.cols();
  check(static_cast<int>(targets.size()) == m, "targets: length mismatch");
  check(static_cast<int>(mask.size()) == m, "mask: length mismatch");
  for (int t : targets) check(t >= 0 && t < v, "target id out of range");
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    if (mask[i] == 0.0) continue;
    double mx = -HUGE_VAL;
    for (int j = 0; j < v; ++j) mx = std::max(mx, logits.values()[i * v + j]);
    double lse = 0.0;
    for (int j = 0; j < v; ++j) lse += std::exp(logits.values()[i * v + j] - mx);
    lse = mx + std::log(lse);
    total += mask[i] * (lse - logits.values()[i * v + targets[i]]);
  }
  Tensor out = Tensor::scalar(total);
  if (track(tape, {&logits})) {
    out.set_requires_grad(true);
    tape.record([logits, out, targets, mask, m, v]() mutable {
      if (!logits.requires_grad()) return;
      double g = out.grad()[0];
      for (int i = 0; i < m; ++i) {
        if (mask[i] == 0.0) continue;
        double mx = -HUGE_VAL;
        for (int j = 0; j < v; ++j) mx = std::max(mx, logits.values()[i * v + j]);
        double denom = 0.0;
        for (int j = 0; j < v; ++j) denom += std::exp(logits.values()[i * v + j] - mx);
        for (int j = 0; j < v; ++j) {
          double p = std::exp(logits.values()[i * v + j] - mx) / denom;
          logits.grad()[i * v + j] +=
              g * mask[i] * (p - (j == targets[i] ? 1.0 : 0.0));
        }
      }
    });
  }
  return out;
}

}  // namespace graphtoken
