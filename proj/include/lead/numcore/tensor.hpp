#pragma once

// Reverse-mode differentiable dense arrays.
//
// A Tensor is a cheap shared handle to a graph node. Results of operations
// keep links to their inputs only when some input requires a gradient, so
// evaluation on frozen parameters builds no graph at all. Everything is
// stored row-major in double precision; rank-1 shapes behave as a single row.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace lead::num {

using Shape = std::vector<std::size_t>;

struct Node {
  Shape shape;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<std::shared_ptr<Node>> parents;
  // Adds this node's grad, pushed through the local derivative, into the
  // parents' grads.
  std::function<void(Node&)> backward;
  bool requires_grad = false;
};

using NodePtr = std::shared_ptr<Node>;

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor scalar(double v);
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  // Mutable storage. Only meaningful on leaves (parameters, inputs).
  std::span<double> data() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> grad_data() { return node_->grad; }

  double item() const;
  double at(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  // Same values, cut from the graph.
  Tensor detach() const;

  Node* node() const { return node_.get(); }
  const NodePtr& ptr() const { return node_; }

 private:
  NodePtr node_;
};

// Builds a result node. Parents and the backward closure are retained only
// when at least one parent requires a gradient.
Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> value,
                   std::initializer_list<const Tensor*> parents,
                   std::function<void(Node&)> backward);
Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> value,
                   const std::vector<Tensor>& parents, std::function<void(Node&)> backward);

// While alive, operations on this thread record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Deterministic reverse topological schedule rooted at a scalar seed.
class ComputeGraph {
 public:
  explicit ComputeGraph(const Tensor& seed);

  std::size_t size() const { return order_.size(); }
  // Assigns d(seed)/d(node) to every node reachable from the seed that
  // requires a gradient. Gradients are overwritten, never accumulated across
  // calls, so repeated runs give identical results.
  void backward();

 private:
  Tensor seed_;
  std::vector<Node*> order_;  // topological: parents before children
};

void backward(const Tensor& seed);

}  // namespace lead::num
