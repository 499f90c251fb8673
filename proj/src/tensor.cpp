#include "absa/tensor.hpp"

#include <sstream>

namespace absa {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << "]";
  return os.str();
}

static std::shared_ptr<TensorNode> make_node(const Shape& shape, bool rg) {
  auto n = std::make_shared<TensorNode>();
  n->shape = shape;
  n->value.assign(static_cast<std::size_t>(shape_size(shape)), 0.0);
  n->requires_grad = rg;
  if (rg) n->grad.assign(n->value.size(), 0.0);
  return n;
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  return Tensor(make_node(shape, requires_grad));
}

Tensor Tensor::full(const Shape& shape, double v, bool requires_grad) {
  auto n = make_node(shape, requires_grad);
  for (auto& x : n->value) x = v;
  return Tensor(std::move(n));
}

Tensor Tensor::from_data(const Shape& shape, std::vector<double> data,
                         bool requires_grad) {
  if (static_cast<int>(data.size()) != shape_size(shape)) {
    throw ShapeError("from_data: " + std::to_string(data.size()) +
                     " values do not fill shape " + shape_str(shape));
  }
  auto n = make_node(shape, requires_grad);
  n->value = std::move(data);
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) {
  auto n = make_node({}, false);
  n->value[0] = v;
  return Tensor(std::move(n));
}

Tensor Tensor::randn(const Shape& shape, Rng& rng, double stddev,
                     bool requires_grad) {
  auto n = make_node(shape, requires_grad);
  for (auto& x : n->value) x = rng.normal(0.0, stddev);
  return Tensor(std::move(n));
}

double Tensor::item() const {
  if (!is_scalar()) {
    throw ContractError("item() on non-scalar tensor of shape " +
                        shape_str(shape()));
  }
  return node_->value[0];
}

std::vector<double>& Tensor::grad() {
  if (!requires_grad()) throw ContractError("grad() on tensor without grad");
  return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
  if (!requires_grad()) throw ContractError("grad() on tensor without grad");
  return node_->grad;
}

void Tensor::set_requires_grad(bool rg) {
  node_->requires_grad = rg;
  if (rg) {
    node_->grad.assign(node_->value.size(), 0.0);
  } else {
    node_->grad.clear();
  }
}

void Tensor::zero_grad() {
  if (requires_grad()) node_->grad.assign(node_->value.size(), 0.0);
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() {
  prev_ = g_active_tape;
  g_active_tape = this;
}

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(const Tensor& out, std::function<void()> backward_step) {
  outputs_.push_back(out.handle());
  ops_.push_back(std::move(backward_step));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || !loss.is_scalar()) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : "<null>"));
  }
  Tape* tape = Tape::active();
  if (!tape) throw ContractError("backward called with no active tape");
  if (!loss.requires_grad()) {
    throw ContractError("backward: loss does not depend on any parameter");
  }
  // Intermediates restart from zero on every call; leaves keep
  // accumulating, the optimizer owns the explicit zero-grad step.
  for (auto& node : tape->outputs_) {
    if (node->requires_grad) {
      std::fill(node->grad.begin(), node->grad.end(), 0.0);
    }
  }
  loss.node()->grad[0] += 1.0;
  for (auto it = tape->ops_.rbegin(); it != tape->ops_.rend(); ++it) {
    (*it)();
  }
}

}  // namespace absa
