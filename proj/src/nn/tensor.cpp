#include "cmr/nn/tensor.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace cmr::nn {

namespace {
thread_local bool t_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::vector<Real>& Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), Real(0));
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value.assign(shape_numel(shape), Real(0));
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<Real> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw std::invalid_argument("tensor shape " + shape_str(shape) + " does not match " +
                                std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(Real value, bool requires_grad) { return from({1}, {value}, requires_grad); }

std::size_t Tensor::rows() const { return node_->shape.empty() ? 1 : node_->shape.front(); }

std::size_t Tensor::cols() const {
  if (node_->shape.size() < 2) return node_->shape.empty() ? 1 : 1;
  std::size_t n = 1;
  for (std::size_t i = 1; i < node_->shape.size(); ++i) n *= node_->shape[i];
  return n;
}

Real Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), Real(0));
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

namespace {

template <typename Range>
Tensor make_result_impl(Shape shape, std::vector<Real> value, const Range& inputs,
                        std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (t_grad_enabled) {
    bool any = false;
    for (const Tensor& t : inputs) any = any || (t.defined() && t.requires_grad());
    if (any) {
      node->requires_grad = true;
      node->inputs.reserve(inputs.size());
      for (const Tensor& t : inputs) node->inputs.push_back(t.node_ptr());
      node->backward_fn = std::move(backward_fn);
    }
  }
  return Tensor(std::move(node));
}

}  // namespace

Tensor make_result(Shape shape, std::vector<Real> value, std::initializer_list<Tensor> inputs,
                   std::function<void(Node&)> backward_fn) {
  return make_result_impl(std::move(shape), std::move(value), inputs, std::move(backward_fn));
}

Tensor make_result(Shape shape, std::vector<Real> value, const std::vector<Tensor>& inputs,
                   std::function<void(Node&)> backward_fn) {
  return make_result_impl(std::move(shape), std::move(value), inputs, std::move(backward_fn));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward() needs a scalar loss");
  }
  Node* root = &loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child != nullptr && child->requires_grad && seen.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad()[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

}  // namespace cmr::nn
