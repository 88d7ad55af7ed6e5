#pragma once

// Dense tensors with tape-free reverse-mode differentiation.
//
// Every Tensor is an immutable handle to a node holding its values. When any
// input requires a gradient (and grad mode is on) the node also records its
// parents and a backward closure. Nodes are numbered at creation, so the
// reverse of creation order is a valid topological order for backward().

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace depiabs {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::uint64_t mark = 0;  // visit stamp used by backward()
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

using NodePtr = std::shared_ptr<Node>;

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(detail::NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  static Tensor from(std::vector<double> values);
  static Tensor from(std::vector<double> values, Shape shape);
  static Tensor scalar(double v);
  // Leaves that participate in differentiation.
  static Tensor parameter(double v);
  static Tensor parameter(std::vector<double> values, Shape shape);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }

  std::span<const double> values() const { return node_->value; }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  // Gradient after backward(); all zeros for tensors off the loss path.
  std::vector<double> grad() const;
  double grad_item() const;

  Tensor detach() const;
  void backward() const;

  const detail::NodePtr& node() const { return node_; }

 private:
  detail::NodePtr node_;
};

// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

namespace detail {

// Creates a result node. If no parent requires a gradient (or grad mode is off)
// the closure and parents are dropped.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward);

bool any_requires_grad(std::initializer_list<const Tensor*> inputs);

// Output length for elementwise broadcasting: equal sizes, or size-1 operands.
std::size_t broadcast_size(std::initializer_list<const Tensor*> inputs);
Shape broadcast_shape(std::initializer_list<const Tensor*> inputs);

}  // namespace detail

// Elementwise arithmetic. Operands must have equal size or be size 1.
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);
Tensor operator+(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(const Tensor& a, double b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(const Tensor& a, double b);
Tensor operator*(double a, const Tensor& b);
Tensor operator/(const Tensor& a, double b);
Tensor operator/(double a, const Tensor& b);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor cos(const Tensor& a);
// Gradient passes only strictly inside [lo, hi].
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor maximum(const Tensor& a, double floor);
Tensor minimum(const Tensor& a, double ceiling);
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Smallest element; the gradient goes to the first minimiser.
Tensor min_element(const Tensor& a);
Tensor max_element(const Tensor& a);

// out[i] = a[index[i]].
Tensor gather(const Tensor& a, std::span<const std::size_t> index);
// out has `size` entries; out[index[i]] += a[i].
Tensor index_add(const Tensor& a, std::span<const std::size_t> index, std::size_t size);

// Views over row-major (rows x cols) matrices.
Tensor column(const Tensor& matrix, std::size_t col);
Tensor stack_columns(const std::vector<Tensor>& columns);
Tensor softmax_rows(const Tensor& matrix);
Tensor reshape(const Tensor& a, Shape shape);

// Joins scalars or vectors end to end into one vector.
Tensor concat(const std::vector<Tensor>& parts);
Tensor slice(const Tensor& a, std::size_t begin, std::size_t end);

}  // namespace depiabs
