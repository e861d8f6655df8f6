#include "murmur/nn/variable.h"

#include <unordered_set>

#include "murmur/error.h"

namespace murmur::nn {

Variable::Variable(Tensor value, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Variable Variable::make(Tensor value, std::vector<Variable> inputs, std::function<void(detail::Node&)> backward) {
  Variable out(std::move(value), false);
  for (const auto& in : inputs) out.node_->requires_grad |= in.requires_grad();
  if (out.node_->requires_grad) {
    out.node_->inputs = std::move(inputs);
    out.node_->backward = std::move(backward);
  }
  return out;
}

const Tensor& Variable::grad() const {
  if (node_->grad.empty()) throw Error("variable has no gradient");
  return node_->grad;
}

Tensor& Variable::grad_buffer() {
  if (node_->grad.empty()) node_->grad = Tensor(node_->value.shape());
  return node_->grad;
}

void Variable::zero_grad() {
  if (!node_->grad.empty()) node_->grad.fill(0.0);
}

void Variable::backward() {
  if (value().size() != 1) throw ShapeError("backward() without seed requires a single-element output");
  backward(Tensor(value().shape(), 1.0));
}

void Variable::backward(const Tensor& seed) {
  if (seed.shape() != value().shape()) throw ShapeError("backward seed shape mismatch");
  if (!requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].node_.get();
      if (child->requires_grad && child->backward && visited.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  auto& g = grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

void accumulate(Variable& v, const Tensor& contribution) {
  if (!v.requires_grad()) return;
  auto& g = v.grad_buffer();
  if (g.size() != contribution.size()) throw ShapeError("gradient contribution size mismatch");
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += contribution[i];
}

}  // namespace murmur::nn
