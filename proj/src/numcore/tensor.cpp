#include "lead/numcore/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "lead/error.hpp"

namespace lead::num {

namespace {

thread_local bool g_no_grad = false;

NodePtr new_node(Shape shape, std::vector<double> values) {
  if (shape.empty() || shape.size() > 2) {
    throw InvalidInput("tensor rank must be 1 or 2");
  }
  std::size_t count = 1;
  for (auto d : shape) {
    if (d == 0) throw InvalidInput("tensor dimensions must be positive");
    count *= d;
  }
  if (count != values.size()) {
    throw InvalidInput("tensor shape does not match number of values");
  }
  auto n = std::make_shared<Node>();
  n->rows = shape.size() == 2 ? shape[0] : 1;
  n->cols = shape.back();
  n->shape = std::move(shape);
  n->value = std::move(values);
  return n;
}

}  // namespace

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return Tensor(new_node(std::move(shape), std::move(values)));
}

Tensor Tensor::zeros(Shape shape) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  return constant(std::move(shape), std::vector<double>(count, 0.0));
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  auto t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  t.node_->grad.assign(t.node_->value.size(), 0.0);
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw InvalidInput("item() requires a single-element tensor");
  return node_->value[0];
}

Tensor Tensor::detach() const { return constant(node_->shape, node_->value); }

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }

Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> value,
                   std::initializer_list<const Tensor*> parents,
                   std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->shape = rows == 1 && cols == 1 ? Shape{1} : Shape{rows, cols};
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(value);
  bool any = false;
  if (!g_no_grad) {
    for (const Tensor* p : parents) any = any || p->requires_grad();
  }
  if (any) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (const Tensor* p : parents) n->parents.push_back(p->ptr());
    n->backward = std::move(backward);
  }
  return Tensor(std::move(n));
}

Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> value,
                   const std::vector<Tensor>& parents, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->shape = rows == 1 && cols == 1 ? Shape{1} : Shape{rows, cols};
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(value);
  bool any = !g_no_grad && std::any_of(parents.begin(), parents.end(),
                                       [](const Tensor& p) { return p.requires_grad(); });
  if (any) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (const Tensor& p : parents) n->parents.push_back(p.ptr());
    n->backward = std::move(backward);
  }
  return Tensor(std::move(n));
}

ComputeGraph::ComputeGraph(const Tensor& seed) : seed_(seed) {
  if (!seed.defined() || seed.size() != 1) {
    throw InvalidInput("backward seed must be a scalar node");
  }
  if (!seed.requires_grad()) return;

  // Iterative post-order DFS; parent order fixes the schedule.
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(seed.node(), 0);
  visited.insert(seed.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order_.push_back(node);
      stack.pop_back();
    }
  }
}

void ComputeGraph::backward() {
  for (Node* n : order_) n->grad.assign(n->value.size(), 0.0);
  if (order_.empty()) return;
  seed_.node()->grad[0] = 1.0;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

void backward(const Tensor& seed) { ComputeGraph(seed).backward(); }

}  // namespace lead::num
