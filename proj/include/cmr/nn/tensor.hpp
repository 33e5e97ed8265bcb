#pragma once

// Dense row-major tensors with a reverse-mode tape.
//
// A Tensor is a shared handle to a Node. Ops record their inputs and a
// backward closure on the result node while grad mode is on and at least one
// input requires a gradient. backward() walks the recorded graph in reverse
// topological order and accumulates into every reachable node's grad buffer.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cmr/nn/real.hpp"

namespace cmr::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  // Allocates a zero gradient buffer on first use.
  std::vector<Real>& ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<Real> values, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->value.size(); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  // Matrix view: leading dim, and product of the rest.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<Real> values() { return node_->value; }
  std::span<const Real> values() const { return node_->value; }
  Real item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Gradient buffer, allocated (zeroed) on demand.
  std::span<Real> grad() { return node_->ensure_grad(); }
  std::span<const Real> grad() const { return node_->ensure_grad(); }
  void zero_grad();

  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds a result node. Records inputs and the closure only when grad mode is
// on and some input requires a gradient.
Tensor make_result(Shape shape, std::vector<Real> value, std::initializer_list<Tensor> inputs,
                   std::function<void(Node&)> backward_fn);
Tensor make_result(Shape shape, std::vector<Real> value, const std::vector<Tensor>& inputs,
                   std::function<void(Node&)> backward_fn);

// Seeds d(loss)/d(loss) = 1 and propagates. loss must hold exactly one value.
void backward(const Tensor& loss);

}  // namespace cmr::nn
