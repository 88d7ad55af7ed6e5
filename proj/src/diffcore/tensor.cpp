#include "depiabs/diffcore/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>

#include "depiabs/errors.hpp"

namespace depiabs {

namespace {

std::atomic<std::uint64_t> next_node_id{1};
thread_local bool grad_mode = true;

detail::NodePtr new_node(Shape shape, std::vector<double> value, bool requires_grad) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->id = next_node_id.fetch_add(1, std::memory_order_relaxed);
  return node;
}

inline std::size_t bidx(std::size_t n, std::size_t i) { return n == 1 ? 0 : i; }

// Elementwise unary op; `deriv(x, y)` is dy/dx.
template <class F, class D>
Tensor unary(const Tensor& a, F f, D deriv) {
  const auto x = a.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  if (!detail::any_requires_grad({&a})) return detail::make_result(a.shape(), std::move(out), {}, {});
  return detail::make_result(a.shape(), std::move(out), {a}, [deriv](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& ga = pa.grad_buffer();
    for (std::size_t i = 0; i < self.value.size(); ++i)
      ga[i] += self.grad[i] * deriv(pa.value[i], self.value[i]);
  });
}

// Elementwise binary op with size-1 broadcasting. `da(x, y, z)` and `db(x, y, z)`
// are the partials of z = f(x, y).
template <class F, class DA, class DB>
Tensor binary(const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  const std::size_t n = detail::broadcast_size({&a, &b});
  const auto x = a.values();
  const auto y = b.values();
  const std::size_t na = x.size(), nb = y.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(x[bidx(na, i)], y[bidx(nb, i)]);
  Shape shape = detail::broadcast_shape({&a, &b});
  if (!detail::any_requires_grad({&a, &b})) return detail::make_result(shape, std::move(out), {}, {});
  return detail::make_result(std::move(shape), std::move(out), {a, b}, [da, db](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const std::size_t na = pa.value.size(), nb = pb.value.size();
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < self.value.size(); ++i) {
        const double xv = pa.value[bidx(na, i)], yv = pb.value[bidx(nb, i)];
        ga[bidx(na, i)] += self.grad[i] * da(xv, yv, self.value[i]);
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t i = 0; i < self.value.size(); ++i) {
        const double xv = pa.value[bidx(na, i)], yv = pb.value[bidx(nb, i)];
        gb[bidx(nb, i)] += self.grad[i] * db(xv, yv, self.value[i]);
      }
    }
  });
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

bool grad_enabled() { return grad_mode; }

NoGradGuard::NoGradGuard() : previous_(grad_mode) { grad_mode = false; }
NoGradGuard::~NoGradGuard() { grad_mode = previous_; }

namespace detail {

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward) {
  bool track = false;
  if (grad_mode && backward) {
    for (const auto& p : parents) track = track || p.requires_grad();
  }
  auto node = new_node(std::move(shape), std::move(value), track);
  if (track) {
    node->parents.reserve(parents.size());
    for (const auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

bool any_requires_grad(std::initializer_list<const Tensor*> inputs) {
  if (!grad_mode) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

std::size_t broadcast_size(std::initializer_list<const Tensor*> inputs) {
  std::size_t n = 1;
  for (const Tensor* t : inputs) {
    const std::size_t s = t->size();
    if (s == 1) continue;
    if (n != 1 && s != n)
      throw UsageError("incompatible operand sizes " + std::to_string(n) + " and " + std::to_string(s));
    n = s;
  }
  return n;
}

Shape broadcast_shape(std::initializer_list<const Tensor*> inputs) {
  const Tensor* widest = *inputs.begin();
  for (const Tensor* t : inputs)
    if (t->size() > widest->size()) widest = t;
  return widest->shape();
}

}  // namespace detail

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double v) {
  std::vector<double> values(shape_size(shape), v);
  return Tensor(new_node(std::move(shape), std::move(values), false));
}

Tensor Tensor::from(std::vector<double> values) {
  Shape shape{values.size()};
  return Tensor(new_node(std::move(shape), std::move(values), false));
}

Tensor Tensor::from(std::vector<double> values, Shape shape) {
  if (shape_size(shape) != values.size()) throw UsageError("value count does not match shape");
  return Tensor(new_node(std::move(shape), std::move(values), false));
}

Tensor Tensor::scalar(double v) { return Tensor(new_node({}, {v}, false)); }

Tensor Tensor::parameter(double v) { return Tensor(new_node({}, {v}, true)); }

Tensor Tensor::parameter(std::vector<double> values, Shape shape) {
  if (shape_size(shape) != values.size()) throw UsageError("value count does not match shape");
  return Tensor(new_node(std::move(shape), std::move(values), true));
}

double Tensor::item() const {
  if (size() != 1) throw UsageError("item() on tensor with " + std::to_string(size()) + " elements");
  return node_->value[0];
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.size() == node_->value.size()) return node_->grad;
  return std::vector<double>(node_->value.size(), 0.0);
}

double Tensor::grad_item() const {
  if (size() != 1) throw UsageError("grad_item() on non-scalar tensor");
  return node_->grad.empty() ? 0.0 : node_->grad[0];
}

Tensor Tensor::detach() const { return Tensor(new_node(shape(), node_->value, false)); }

void Tensor::backward() const {
  if (!node_ || size() != 1) throw UsageError("backward() requires a scalar loss");
  if (!node_->requires_grad) throw UsageError("loss does not depend on any parameter");

  const std::uint64_t epoch = next_node_id.fetch_add(1, std::memory_order_relaxed);
  std::vector<detail::Node*> stack{node_.get()};
  std::vector<detail::Node*> all;
  node_->mark = epoch;
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    all.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && p->mark != epoch) {
        p->mark = epoch;
        stack.push_back(p.get());
      }
    }
  }
  std::sort(all.begin(), all.end(), [](const detail::Node* a, const detail::Node* b) { return a->id > b->id; });
  for (detail::Node* n : all) n->grad.assign(n->value.size(), 0.0);
  node_->grad[0] = 1.0;
  for (detail::Node* n : all) {
    if (n->backward) n->backward(*n);
  }
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor operator*(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor operator/(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double z) { return -z / y; });
}

Tensor operator-(const Tensor& a) {
  return unary(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor operator+(const Tensor& a, double b) {
  return unary(a, [b](double x) { return x + b; }, [](double, double) { return 1.0; });
}
Tensor operator+(double a, const Tensor& b) { return b + a; }
Tensor operator-(const Tensor& a, double b) { return a + (-b); }
Tensor operator-(double a, const Tensor& b) {
  return unary(b, [a](double x) { return a - x; }, [](double, double) { return -1.0; });
}
Tensor operator*(const Tensor& a, double b) {
  return unary(a, [b](double x) { return x * b; }, [b](double, double) { return b; });
}
Tensor operator*(double a, const Tensor& b) { return b * a; }
Tensor operator/(const Tensor& a, double b) { return a * (1.0 / b); }
Tensor operator/(double a, const Tensor& b) {
  return unary(b, [a](double x) { return a / x; }, [](double x, double y) { return -y / x; });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sqrt(const Tensor& a) {
  return unary(
      a, [](double x) { return std::sqrt(x); }, [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor cos(const Tensor& a) {
  return unary(a, [](double x) { return std::cos(x); }, [](double x, double) { return -std::sin(x); });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor maximum(const Tensor& a, double floor) {
  return unary(
      a, [floor](double x) { return x > floor ? x : floor; },
      [floor](double x, double) { return x > floor ? 1.0 : 0.0; });
}

Tensor minimum(const Tensor& a, double ceiling) {
  return unary(
      a, [ceiling](double x) { return x < ceiling ? x : ceiling; },
      [ceiling](double x, double) { return x < ceiling ? 1.0 : 0.0; });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x <= y ? x : y; },
      [](double x, double y, double) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x <= y ? 0.0 : 1.0; });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x >= y ? x : y; },
      [](double x, double y, double) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x >= y ? 0.0 : 1.0; });
}

Tensor sum(const Tensor& a) {
  const auto x = a.values();
  double s = 0.0;
  for (double v : x) s += v;
  return detail::make_result({}, {s}, {a}, [](detail::Node& self) {
    auto& p = *self.parents[0];
    auto& g = p.grad_buffer();
    for (double& gi : g) gi += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw UsageError("mean of empty tensor");
  return sum(a) / static_cast<double>(a.size());
}

namespace {

Tensor select_element(const Tensor& a, std::size_t at) {
  return detail::make_result({}, {a[at]}, {a}, [at](detail::Node& self) {
    self.parents[0]->grad_buffer()[at] += self.grad[0];
  });
}

}  // namespace

Tensor min_element(const Tensor& a) {
  if (a.size() == 0) throw UsageError("min of empty tensor");
  const auto x = a.values();
  return select_element(a, static_cast<std::size_t>(std::min_element(x.begin(), x.end()) - x.begin()));
}

Tensor max_element(const Tensor& a) {
  if (a.size() == 0) throw UsageError("max of empty tensor");
  const auto x = a.values();
  return select_element(a, static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin()));
}

Tensor gather(const Tensor& a, std::span<const std::size_t> index) {
  const auto x = a.values();
  std::vector<double> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= x.size()) throw UsageError("gather: index out of range");
    out[i] = x[index[i]];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return detail::make_result({index.size()}, std::move(out), {a}, [idx = std::move(idx)](detail::Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i) g[idx[i]] += self.grad[i];
  });
}

Tensor index_add(const Tensor& a, std::span<const std::size_t> index, std::size_t size) {
  if (index.size() != a.size()) throw UsageError("index_add: index length must match input");
  const auto x = a.values();
  std::vector<double> out(size, 0.0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= size) throw UsageError("index_add: index out of range");
    out[index[i]] += x[i];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return detail::make_result({size}, std::move(out), {a}, [idx = std::move(idx)](detail::Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i) g[i] += self.grad[idx[i]];
  });
}

Tensor column(const Tensor& matrix, std::size_t col) {
  if (matrix.rank() != 2 || col >= matrix.dim(1)) throw UsageError("column: bad matrix or column index");
  const std::size_t rows = matrix.dim(0), cols = matrix.dim(1);
  const auto x = matrix.values();
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = x[r * cols + col];
  return detail::make_result({rows}, std::move(out), {matrix}, [col, cols](detail::Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < self.value.size(); ++r) g[r * cols + col] += self.grad[r];
  });
}

Tensor stack_columns(const std::vector<Tensor>& columns) {
  if (columns.empty()) throw UsageError("stack_columns: no columns");
  const std::size_t cols = columns.size();
  std::size_t rows = 1;
  for (const auto& c : columns) rows = std::max(rows, c.size());
  for (const auto& c : columns)
    if (c.size() != rows && c.size() != 1) throw UsageError("stack_columns: ragged columns");
  std::vector<double> out(rows * cols);
  for (std::size_t k = 0; k < cols; ++k) {
    const auto x = columns[k].values();
    for (std::size_t r = 0; r < rows; ++r) out[r * cols + k] = x[bidx(x.size(), r)];
  }
  return detail::make_result({rows, cols}, std::move(out), columns, [rows, cols](detail::Node& self) {
    for (std::size_t k = 0; k < cols; ++k) {
      auto& p = *self.parents[k];
      if (!p.requires_grad) continue;
      auto& g = p.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) g[bidx(g.size(), r)] += self.grad[r * cols + k];
    }
  });
}

Tensor softmax_rows(const Tensor& matrix) {
  if (matrix.rank() != 2) throw UsageError("softmax_rows expects a matrix");
  const std::size_t rows = matrix.dim(0), cols = matrix.dim(1);
  const auto x = matrix.values();
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = &x[r * cols];
    double* yr = &out[r * cols];
    const double top = *std::max_element(xr, xr + cols);
    double z = 0.0;
    for (std::size_t k = 0; k < cols; ++k) z += (yr[k] = std::exp(xr[k] - top));
    for (std::size_t k = 0; k < cols; ++k) yr[k] /= z;
  }
  return detail::make_result(matrix.shape(), std::move(out), {matrix}, [rows, cols](detail::Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = &self.value[r * cols];
      const double* gy = &self.grad[r * cols];
      double dot = 0.0;
      for (std::size_t k = 0; k < cols; ++k) dot += y[k] * gy[k];
      for (std::size_t k = 0; k < cols; ++k) g[r * cols + k] += y[k] * (gy[k] - dot);
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) throw UsageError("reshape: element count mismatch");
  std::vector<double> out(a.values().begin(), a.values().end());
  return detail::make_result(std::move(shape), std::move(out), {a}, [](detail::Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  std::vector<double> out;
  out.reserve(total);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return detail::make_result({total}, std::move(out), parts, [](detail::Node& self) {
    std::size_t offset = 0;
    for (auto& p : self.parents) {
      const std::size_t n = p->value.size();
      if (p->requires_grad) {
        auto& g = p->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

Tensor slice(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.size()) throw UsageError("slice out of range");
  const auto x = a.values();
  std::vector<double> out(x.begin() + static_cast<std::ptrdiff_t>(begin), x.begin() + static_cast<std::ptrdiff_t>(end));
  return detail::make_result({end - begin}, std::move(out), {a}, [begin](detail::Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.value.size(); ++i) g[begin + i] += self.grad[i];
  });
}

}  // namespace depiabs
