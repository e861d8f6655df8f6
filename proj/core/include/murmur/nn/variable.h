#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "murmur/nn/tensor.h"

namespace murmur::nn {

class Variable;

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<Variable> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;
};

}  // namespace detail

// A value in the reverse-mode graph. Copies share the same node. Leaves created
// with requires_grad = true act as trainable parameters: their grad persists
// across backward() calls until zero_grad().
class Variable {
 public:
  Variable() = default;
  explicit Variable(Tensor value, bool requires_grad = false);

  // Records an op output. The backward closure is kept only if some input
  // requires a gradient.
  static Variable make(Tensor value, std::vector<Variable> inputs, std::function<void(detail::Node&)> backward);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }

  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor& grad() const;
  // Zero-initialized on first use.
  Tensor& grad_buffer();
  void zero_grad();

  // Seeds d(self)/d(self) = 1 (self must hold one element) and propagates.
  void backward();
  void backward(const Tensor& seed);

  const detail::Node* node() const { return node_.get(); }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Accumulate a scaled contribution into v's gradient if v is tracked.
void accumulate(Variable& v, const Tensor& contribution);

}  // namespace murmur::nn
