#pragma once

// Dense double-precision tensors plus a reverse-mode autodiff tape.
// Rank 0 (scalar), 1 (vector) and 2 (matrix) cover everything this
// project computes; values are immutable after an op creates them,
// only grad buffers mutate.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "absa/error.hpp"
#include "absa/rng.hpp"

namespace absa {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

inline int shape_size(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // same length as value iff requires_grad
  bool requires_grad = false;
  bool leaf = true;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double v, bool requires_grad = false);
  static Tensor from_data(const Shape& shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v);
  static Tensor randn(const Shape& shape, Rng& rng, double stddev,
                      bool requires_grad = true);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int size() const { return static_cast<int>(node_->value.size()); }
  bool is_scalar() const { return node_->shape.empty(); }

  // Rank-2 helpers; rows()==size() for vectors.
  int rows() const { return rank() == 2 ? node_->shape[0] : size(); }
  int cols() const { return rank() == 2 ? node_->shape[1] : 1; }

  double item() const;
  double v(int i) const { return node_->value[static_cast<std::size_t>(i)]; }
  double v(int i, int j) const {
    return node_->value[static_cast<std::size_t>(i) * cols() + j];
  }
  double g(int i) const { return node_->grad[static_cast<std::size_t>(i)]; }
  double g(int i, int j) const {
    return node_->grad[static_cast<std::size_t>(i) * cols() + j];
  }

  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& grad();
  const std::vector<double>& grad() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool rg);
  void zero_grad();

  TensorNode* node() const { return node_.get(); }
  const std::shared_ptr<TensorNode>& handle() const { return node_; }

  static Tensor wrap(std::shared_ptr<TensorNode> n) { return Tensor(std::move(n)); }

 private:
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}
  std::shared_ptr<TensorNode> node_;
};

// Ordered record of the primitive ops executed under it; replaying the
// record in reverse drives reverse-mode differentiation. At most one
// tape is active per thread; nesting restores the previous one.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  void record(const Tensor& out, std::function<void()> backward_step);
  std::size_t num_ops() const { return ops_.size(); }

 private:
  friend void backward(const Tensor& loss);
  std::vector<std::function<void()>> ops_;
  std::vector<std::shared_ptr<TensorNode>> outputs_;
  Tape* prev_ = nullptr;
};

// Seeds d(loss)/d(loss) = 1 and replays the active tape in reverse
// execution order. Grads of requires_grad leaves accumulate across
// calls; intermediate grads are reset on each call.
void backward(const Tensor& loss);

}  // namespace absa
