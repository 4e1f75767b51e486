// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Dense tensors with tape-free reverse-mode differentiation. Every op result
// keeps shared pointers to its inputs plus a backward rule; backward() sorts
// the reachable graph topologically and runs each rule exactly once.

#ifndef BINAURAL_TENSOR_HPP_
#define BINAURAL_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace binaural::ad {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const { return !backward_fn; }
  // Sizes the grad buffer on first use.
  std::vector<T>& grad_buffer();
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, T value, bool requires_grad = false);
  static Tensor from(const Shape& shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int axis) const;
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<T> data() { return node_->value; }
  std::span<const T> data() const { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad_buffer(); }
  bool has_grad() const { return !node_->grad.empty(); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag);
  void zero_grad();

  // Value of a single-element tensor.
  T item() const;
  // Independent copy of the value that is cut off from the graph.
  Tensor detach() const;

  // Accumulates d(this)/d(leaf) into every reachable leaf that requires grad.
  // Intermediate grads are reset on each call; leaf grads accumulate.
  void backward() const;

  const std::shared_ptr<Node<T>>& node() const { return node_; }
  const char* op() const { return node_->op; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Graph recording is on by default; NoGradGuard disables it for the current
// thread until it goes out of scope.
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

// Builds an op result. `backward` is attached only when recording is on and
// some input requires grad. Non-finite forward values throw.
template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> value,
                      std::vector<Tensor<T>> inputs, std::function<void(Node<T>&)> backward);

}  // namespace binaural::ad

#endif  // BINAURAL_TENSOR_HPP_
