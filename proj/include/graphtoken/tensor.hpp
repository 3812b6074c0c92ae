#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace graphtoken {

// Dense 64-bit float tensor, rank 0..2 (scalar, vector, matrix), row-major.
// Value-semantics handle onto shared storage so parameters survive across
// training steps while tapes come and go.
struct TensorData {
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grad;  // lazily allocated, same size as values
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return data_ != nullptr; }
  const std::vector<int>& shape() const { return data_->shape; }
  int rank() const { return static_cast<int>(data_->shape.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_->values.size()); }
  int rows() const;
  int cols() const;

  std::vector<double>& values() { return data_->values; }
  const std::vector<double>& values() const { return data_->values; }
  double item() const;  // rank-0 only

  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool on) { data_->requires_grad = on; }

  // Gradient storage, zero-initialized on first touch.
  std::vector<double>& grad();
  bool has_grad() const { return !data_->grad.empty(); }
  void zero_grad();

  TensorData* raw() const { return data_.get(); }

 private:
  explicit Tensor(std::shared_ptr<TensorData> d) : data_(std::move(d)) {}
  std::shared_ptr<TensorData> data_;
};

// Records backward closures in execution order; backward() replays them in
// exact reverse, accumulating gradients additively. Single-threaded.
class Tape {
 public:
  void record(std::function<void()> backward_op) {
    if (recording_) ops_.push_back(std::move(backward_op));
  }
  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }
  std::size_t size() const { return ops_.size(); }
  void clear() { ops_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and replays the tape. Throws
  // std::invalid_argument if loss is not scalar.
  void backward(Tensor loss);

 private:
  std::vector<std::function<void()>> ops_;
  bool recording_ = true;
};

// Primitives. Shapes are validated at construction; there is no implicit
// broadcasting except the documented scalar and row forms.
Tensor matmul(Tape& tape, Tensor a, Tensor b);
Tensor transpose(Tape& tape, Tensor a);
Tensor add(Tape& tape, Tensor a, Tensor b);   // same shape
Tensor sub(Tape& tape, Tensor a, Tensor b);
Tensor mul(Tape& tape, Tensor a, Tensor b);   // elementwise, same shape
Tensor add_scalar(Tape& tape, Tensor a, double s);
Tensor mul_scalar(Tape& tape, Tensor a, double s);
Tensor scale(Tape& tape, Tensor x, Tensor s);  // s is rank-0 (trainable scalar)
Tensor add_row(Tape& tape, Tensor x, Tensor row);  // matrix + row vector
Tensor mul_row(Tape& tape, Tensor x, Tensor row);  // matrix * row vector
Tensor relu(Tape& tape, Tensor x);
Tensor gelu(Tape& tape, Tensor x);  // exact erf form
Tensor softmax_rows(Tape& tape, Tensor x);
Tensor layer_norm_rows(Tape& tape, Tensor x, double eps);
Tensor gather_rows(Tape& tape, Tensor table, const std::vector<int>& indices);
Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts);
Tensor concat_cols(Tape& tape, Tensor a, Tensor b);
Tensor slice_rows(Tape& tape, Tensor x, int begin, int count);
Tensor slice_cols(Tape& tape, Tensor x, int begin, int count);
Tensor segment_sum(Tape& tape, Tensor values, const std::vector<int>& segment_ids,
                   int num_segments);
Tensor segment_mean(Tape& tape, Tensor values, const std::vector<int>& segment_ids,
                    int num_segments);
// Empty segments yield 0 (the documented sentinel); ties route the gradient
// to the first maximizing row.
Tensor segment_max(Tape& tape, Tensor values, const std::vector<int>& segment_ids,
                   int num_segments);
Tensor sum_all(Tape& tape, Tensor x);  // scalar
// Sum over rows with mask[i] != 0 of -log softmax(logits[i])[targets[i]].
Tensor cross_entropy_with_logits(Tape& tape, Tensor logits,
                                 const std::vector<int>& targets,
                                 const std::vector<double>& mask);

}  // namespace graphtoken
