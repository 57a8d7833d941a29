#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace dialrank {

// Dense row-major tensor of doubles participating in a global gradient tape.
// Rank 0 is not used; scalars are shape {1}. Ops cover rank 1 and 2, which is
// all the models need.

struct TensorImpl {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  bool requires_grad = false;  // leaf parameter
  bool needs_grad = false;     // lies on a path from a leaf parameter
  std::vector<double> grad;    // lazily allocated, same length as data
  int id = -1;                 // tape id, assigned on first tape participation

  std::size_t numel() const { return data.size(); }

  // Allocates a zero grad buffer on first access.
  std::vector<double>& grad_ref() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return impl_->shape; }
  std::size_t numel() const { return impl_->data.size(); }
  std::size_t dim(std::size_t i) const { return impl_->shape[i]; }
  std::size_t rank() const { return impl_->shape.size(); }

  std::vector<double>& data() { return impl_->data; }
  const std::vector<double>& data() const { return impl_->data; }
  double item() const;  // numel()==1 only

  double at(std::size_t i) const { return impl_->data[i]; }
  double at(std::size_t r, std::size_t c) const {
    return impl_->data[r * impl_->shape[1] + c];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  bool needs_grad() const { return impl_ && impl_->needs_grad; }
  const std::vector<double>& grad() const { return impl_->grad; }
  std::vector<double>& grad_ref() { return impl_->grad_ref(); }
  void zero_grad();

  std::shared_ptr<TensorImpl> impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// One executed operation: which tensors went in, which came out, and how to
// push gradients back through it.
struct TapeNode {
  std::vector<int> inputs;
  int output;
  std::function<void()> backward;
};

// Global per-cycle operation record. Construction is single-threaded;
// backward() replays nodes exactly once in reverse order. Cleared explicitly
// between training steps; no graph is retained across batches.
class Tape {
 public:
  static Tape& global();

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }

  int assign_id(TensorImpl& t) {
    if (t.id < 0) t.id = next_id_++;
    return t.id;
  }
  void push(std::vector<int> inputs, int output, std::function<void()> backward) {
    nodes_.push_back({std::move(inputs), output, std::move(backward)});
  }
  void run_backward() {
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
  }
  void clear() {
    nodes_.clear();
    next_id_ = 0;
  }
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<TapeNode> nodes_;
  int next_id_ = 0;
  bool recording_ = true;
};

// Disables tape recording for its scope. Evaluation paths use this to skip
// node construction entirely.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(Tape::global().recording()) { Tape::global().set_recording(false); }
  ~NoGradGuard() { Tape::global().set_recording(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

std::string shape_str(const std::vector<std::size_t>& shape);

// --- ops ---

// C[m×n] = A[m×k] B[k×n]; dA = dC Bᵀ, dB = Aᵀ dC.
Tensor matmul(const Tensor& a, const Tensor& b);
// y[m] = A[m×n] x[n].
Tensor matvec(const Tensor& a, const Tensor& x);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

// v[n] replicated into k rows -> [k×n]; backward sums over rows.
Tensor broadcast_rows(const Tensor& v, std::size_t k);
// v[m] replicated into n columns -> [m×n].
Tensor broadcast_cols(const Tensor& v, std::size_t n);

// Rows, each [n], stacked into [r×n].
Tensor stack_rows(const std::vector<Tensor>& rows);
// Matrices [r×n_i] side by side -> [r×Σn_i].
Tensor concat_cols(const std::vector<Tensor>& parts);
// Vectors [n_i] -> [Σn_i].
Tensor concat(const std::vector<Tensor>& parts);
// v[start .. start+len) of a rank-1 tensor.
Tensor slice(const Tensor& v, std::size_t start, std::size_t len);
// Row i of a rank-2 tensor as [n].
Tensor row(const Tensor& m, std::size_t i);
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);

// Max-subtracted softmax along `axis` (rank 1: axis 0; rank 2: 0 or 1).
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor sigmoid(const Tensor& x);
Tensor tanh_op(const Tensor& x);
// Signed square root y = sign(x)·sqrt(|x|); gradient 0 at x = 0.
Tensor power_norm(const Tensor& x);
// Unit ℓ2 norm per slice along `axis`; slices with norm ≤ 1e-12 pass through.
Tensor l2_normalize(const Tensor& x, std::size_t axis);

// Scalar (shape {1}) sum of all entries.
Tensor sum(const Tensor& x);
// Row `id` of an embedding table [V×e] as [e]; backward scatter-adds.
Tensor embedding_row(const Tensor& table, std::size_t id);

// Populates grads of every needs_grad tensor reachable from a scalar loss.
void backward(const Tensor& loss);

}  // namespace dialrank
