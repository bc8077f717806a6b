// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "qlsc/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "qlsc/kernels.hpp"

namespace qlsc {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

namespace {

std::atomic<std::uint64_t> next_node_id{1};

NodePtr make_node(const char* op, Shape shape, std::vector<double> value) {
  auto node = std::make_shared<Node>();
  node->id = next_node_id.fetch_add(1, std::memory_order_relaxed);
  node->op = op;
  node->shape = std::move(shape);
  node->value = std::move(value);
  return node;
}

// Attaches history to `out` only when some input needs gradients; tensors
// computed purely from constants carry no graph.
Tensor finish(NodePtr out, std::vector<NodePtr> inputs,
              std::function<void(Node&)> rule) {
  const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                 [](const NodePtr& n) { return n->requires_grad; });
  if (needs) {
    out->requires_grad = true;
    out->inputs = std::move(inputs);
    out->backward = std::move(rule);
  }
  return Tensor(std::move(out));
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) {
    throw ContractError(std::string(op) + ": undefined tensor operand");
  }
}

[[noreturn]] void dim_error(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       shape_str(a) + " and " + shape_str(b));
}

// Splits `shape` around `axis` into (outer, extent, inner).
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

// How the smaller operand of a binary op repeats across the larger one.
struct Broadcast {
  bool a_is_big = true;
  std::size_t outer = 1;  // repetitions of the small operand
  std::size_t inner = 0;  // elements in the small operand
  Shape out_shape;
};

Broadcast plan_broadcast(const char* op, const Tensor& a, const Tensor& b) {
  Broadcast plan;
  if (a.shape() == b.shape()) {
    plan.inner = a.numel();
    plan.out_shape = a.shape();
    return plan;
  }
  auto fits = [](const Tensor& small, const Tensor& big) {
    return small.numel() == 1 || is_suffix(small.shape(), big.shape());
  };
  if (fits(b, a) && b.rank() <= a.rank()) {
    plan.a_is_big = true;
    plan.inner = b.numel();
    plan.outer = plan.inner == 0 ? 0 : a.numel() / plan.inner;
    plan.out_shape = a.shape();
    return plan;
  }
  if (fits(a, b) && a.rank() <= b.rank()) {
    plan.a_is_big = false;
    plan.inner = a.numel();
    plan.outer = plan.inner == 0 ? 0 : b.numel() / plan.inner;
    plan.out_shape = b.shape();
    return plan;
  }
  dim_error(op, a.shape(), b.shape());
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---- Tensor ---------------------------------------------------------------

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("Tensor::from: shape " + shape_str(shape) +
                         " holds " + std::to_string(shape_numel(shape)) +
                         " elements but " + std::to_string(data.size()) +
                         " were given");
  }
  auto node = make_node("leaf", std::move(shape), std::move(data));
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::ones(Shape shape, bool requires_grad) {
  return full(std::move(shape), 1.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str(shape()));
  }
  return node_->shape[axis];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on tensor of shape " + shape_str(shape()));
  }
  return node_->value[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != rank()) {
    throw DimensionError("at(): index rank " + std::to_string(index.size()) +
                         " for shape " + shape_str(shape()));
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= node_->shape[axis]) {
      throw DimensionError("at(): index out of range for shape " +
                           shape_str(shape()));
    }
    flat = flat * node_->shape[axis] + i;
    ++axis;
  }
  return node_->value[flat];
}

std::span<const double> Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

// ---- graph traversal ------------------------------------------------------

namespace {

// Post-order over nodes that require gradients.
std::vector<Node*> topo_order(const NodePtr& root) {
  std::vector<Node*> order;
  if (!root->requires_grad) return order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

ComputationRecord record_of(const Tensor& root) {
  require_defined(root, "record_of");
  ComputationRecord record;
  for (Node* node : topo_order(root.node())) {
    if (node->inputs.empty()) continue;
    RecordedOp op{node->id, {}, node->op};
    for (const auto& in : node->inputs) op.input_ids.push_back(in->id);
    record.ops.push_back(std::move(op));
  }
  return record;
}

void backward(const Tensor& loss) {
  require_defined(loss, "backward");
  if (loss.numel() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        shape_str(loss.shape()));
  }
  const auto order = topo_order(loss.node());
  if (order.empty()) return;
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

// ---- linear algebra -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    dim_error("matmul", a.shape(), b.shape());
  }
  const std::size_t p = a.dim(0), q = a.dim(1), r = b.dim(1);
  std::vector<double> out(p * r, 0.0);
  kernels::gemm_nn(a.data().data(), b.data().data(), out.data(), p, q, r);
  auto node = make_node("matmul", {p, r}, std::move(out));
  return finish(node, {a.node(), b.node()}, [p, q, r](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    if (na.requires_grad) {
      na.ensure_grad();
      kernels::gemm_nt(self.grad.data(), nb.value.data(), na.grad.data(), p, q,
                       r);
    }
    if (nb.requires_grad) {
      nb.ensure_grad();
      kernels::gemm_tn(na.value.data(), self.grad.data(), nb.grad.data(), p, q,
                       r);
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_defined(a, "transpose");
  if (a.rank() != 2) {
    throw DimensionError("transpose: expected rank 2, got " +
                         shape_str(a.shape()));
  }
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  std::vector<double> out(rows * cols);
  const auto src = a.data();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = src[i * cols + j];
  }
  auto node = make_node("transpose", {cols, rows}, std::move(out));
  return finish(node, {a.node()}, [rows, cols](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        in.grad[i * cols + j] += self.grad[j * rows + i];
      }
    }
  });
}

Tensor weighted_residual_sum(const Tensor& w, const Tensor& h, const Tensor& c) {
  require_defined(w, "weighted_residual_sum");
  require_defined(h, "weighted_residual_sum");
  require_defined(c, "weighted_residual_sum");
  if (w.rank() != 2 || h.rank() != 2 || c.rank() != 2 || w.dim(1) != h.dim(1) ||
      c.dim(0) != h.dim(0) || c.dim(1) != w.dim(0)) {
    throw DimensionError("weighted_residual_sum: incompatible shapes " +
                         shape_str(w.shape()) + ", " + shape_str(h.shape()) +
                         ", " + shape_str(c.shape()));
  }
  const std::size_t kk = w.dim(0), len = w.dim(1), n = h.dim(0);
  const auto wv = w.data(), hv = h.data(), cv = c.data();
  std::vector<double> out(kk * n, 0.0);
  for (std::size_t k = 0; k < kk; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const double center = cv[j * kk + k];
      double acc = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        acc += wv[k * len + t] * (hv[j * len + t] - center);
      }
      out[k * n + j] = acc;
    }
  }
  auto node = make_node("weighted_residual_sum", {kk, n}, std::move(out));
  return finish(node, {w.node(), h.node(), c.node()}, [kk, len, n](Node& self) {
    Node& nw = *self.inputs[0];
    Node& nh = *self.inputs[1];
    Node& nc = *self.inputs[2];
    const auto& g = self.grad;
    if (nw.requires_grad) {
      nw.ensure_grad();
      for (std::size_t k = 0; k < kk; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
          const double gk = g[k * n + j], center = nc.value[j * kk + k];
          for (std::size_t t = 0; t < len; ++t) {
            nw.grad[k * len + t] += gk * (nh.value[j * len + t] - center);
          }
        }
      }
    }
    if (nh.requires_grad) {
      nh.ensure_grad();
      for (std::size_t k = 0; k < kk; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
          const double gk = g[k * n + j];
          for (std::size_t t = 0; t < len; ++t) {
            nh.grad[j * len + t] += gk * nw.value[k * len + t];
          }
        }
      }
    }
    if (nc.requires_grad) {
      nc.ensure_grad();
      for (std::size_t k = 0; k < kk; ++k) {
        double mass = 0.0;
        for (std::size_t t = 0; t < len; ++t) mass += nw.value[k * len + t];
        for (std::size_t j = 0; j < n; ++j) nc.grad[j * kk + k] -= g[k * n + j] * mass;
      }
    }
  });
}

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_defined(a, "add");
  require_defined(b, "add");
  const auto plan = plan_broadcast("add", a, b);
  const Tensor& big = plan.a_is_big ? a : b;
  const Tensor& small = plan.a_is_big ? b : a;
  const auto& k = kernels::active();
  std::vector<double> out(big.numel());
  for (std::size_t o = 0; o < plan.outer; ++o) {
    k.add(big.data().data() + o * plan.inner, small.data().data(),
          out.data() + o * plan.inner, plan.inner);
  }
  auto node = make_node("add", plan.out_shape, std::move(out));
  return finish(node, {big.node(), small.node()}, [plan](Node& self) {
    const auto& k = kernels::active();
    Node& nb = *self.inputs[0];
    Node& ns = *self.inputs[1];
    if (nb.requires_grad) {
      nb.ensure_grad();
      k.axpy(1.0, self.grad.data(), nb.grad.data(), self.grad.size());
    }
    if (ns.requires_grad) {
      ns.ensure_grad();
      for (std::size_t o = 0; o < plan.outer; ++o) {
        k.axpy(1.0, self.grad.data() + o * plan.inner, ns.grad.data(),
               plan.inner);
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_defined(a, "sub");
  require_defined(b, "sub");
  const auto plan = plan_broadcast("sub", a, b);
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(shape_numel(plan.out_shape));
  for (std::size_t o = 0; o < plan.outer; ++o) {
    for (std::size_t i = 0; i < plan.inner; ++i) {
      const std::size_t big_i = o * plan.inner + i;
      out[big_i] = plan.a_is_big ? ad[big_i] - bd[i] : ad[i] - bd[big_i];
    }
  }
  auto node = make_node("sub", plan.out_shape, std::move(out));
  return finish(node, {a.node(), b.node()}, [plan](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    const std::size_t total = self.grad.size();
    if (na.requires_grad) {
      na.ensure_grad();
      for (std::size_t i = 0; i < total; ++i) {
        na.grad[plan.a_is_big ? i : i % plan.inner] += self.grad[i];
      }
    }
    if (nb.requires_grad) {
      nb.ensure_grad();
      for (std::size_t i = 0; i < total; ++i) {
        nb.grad[plan.a_is_big ? i % plan.inner : i] -= self.grad[i];
      }
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_defined(a, "mul");
  require_defined(b, "mul");
  const auto plan = plan_broadcast("mul", a, b);
  const Tensor& big = plan.a_is_big ? a : b;
  const Tensor& small = plan.a_is_big ? b : a;
  const auto& k = kernels::active();
  std::vector<double> out(big.numel());
  for (std::size_t o = 0; o < plan.outer; ++o) {
    k.mul(big.data().data() + o * plan.inner, small.data().data(),
          out.data() + o * plan.inner, plan.inner);
  }
  auto node = make_node("mul", plan.out_shape, std::move(out));
  return finish(node, {big.node(), small.node()}, [plan](Node& self) {
    const auto& k = kernels::active();
    Node& nb = *self.inputs[0];
    Node& ns = *self.inputs[1];
    if (nb.requires_grad) {
      nb.ensure_grad();
      for (std::size_t o = 0; o < plan.outer; ++o) {
        k.mul_acc(self.grad.data() + o * plan.inner, ns.value.data(),
                  nb.grad.data() + o * plan.inner, plan.inner);
      }
    }
    if (ns.requires_grad) {
      ns.ensure_grad();
      for (std::size_t o = 0; o < plan.outer; ++o) {
        k.mul_acc(self.grad.data() + o * plan.inner,
                  nb.value.data() + o * plan.inner, ns.grad.data(), plan.inner);
      }
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  require_defined(a, "scale");
  std::vector<double> out(a.numel());
  kernels::active().scale(factor, a.data().data(), out.data(), out.size());
  auto node = make_node("scale", a.shape(), std::move(out));
  return finish(node, {a.node()}, [factor](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    kernels::active().axpy(factor, self.grad.data(), in.grad.data(),
                           self.grad.size());
  });
}

Tensor sigmoid(const Tensor& a) {
  require_defined(a, "sigmoid");
  std::vector<double> out(a.numel());
  const auto src = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(src[i]);
  auto node = make_node("sigmoid", a.shape(), std::move(out));
  return finish(node, {a.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      const double y = self.value[i];
      in.grad[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor tanh(const Tensor& a) {
  require_defined(a, "tanh");
  std::vector<double> out(a.numel());
  const auto src = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(src[i]);
  auto node = make_node("tanh", a.shape(), std::move(out));
  return finish(node, {a.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      const double y = self.value[i];
      in.grad[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b,
                   double factor) {
  switch (kind) {
    case Elementwise::kSigmoid:
      return sigmoid(a);
    case Elementwise::kTanh:
      return tanh(a);
    case Elementwise::kAdd:
      return add(a, b);
    case Elementwise::kSub:
      return sub(a, b);
    case Elementwise::kMul:
      return mul(a, b);
    case Elementwise::kScale:
      return scale(a, factor);
  }
  throw ContractError("elementwise: unknown kind");
}

// ---- normalization --------------------------------------------------------

namespace {

std::size_t last_extent(const Tensor& x, const char* op) {
  if (x.rank() == 0) {
    throw DimensionError(std::string(op) + ": needs rank >= 1");
  }
  const std::size_t k = x.shape().back();
  if (k == 0) {
    throw ContractError(std::string(op) + ": last axis is empty in shape " +
                        shape_str(x.shape()));
  }
  return k;
}

}  // namespace

Tensor softmax_last_axis(const Tensor& x) {
  require_defined(x, "softmax_last_axis");
  const std::size_t k = last_extent(x, "softmax_last_axis");
  const std::size_t rows = x.numel() / k;
  const auto src = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in_row = src.data() + r * k;
    double* out_row = out.data() + r * k;
    const double peak = *std::max_element(in_row, in_row + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out_row[j] = std::exp(in_row[j] - peak);
      total += out_row[j];
    }
    for (std::size_t j = 0; j < k; ++j) out_row[j] /= total;
  }
  auto node = make_node("softmax", x.shape(), std::move(out));
  return finish(node, {x.node()}, [k, rows](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    const auto& kt = kernels::active();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * k;
      const double* dy = self.grad.data() + r * k;
      const double inner = kt.dot(y, dy, k);
      double* dx = in.grad.data() + r * k;
      for (std::size_t j = 0; j < k; ++j) dx[j] += y[j] * (dy[j] - inner);
    }
  });
}

Tensor log_softmax_last_axis(const Tensor& x) {
  require_defined(x, "log_softmax_last_axis");
  const std::size_t k = last_extent(x, "log_softmax_last_axis");
  const std::size_t rows = x.numel() / k;
  const auto src = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in_row = src.data() + r * k;
    const double peak = *std::max_element(in_row, in_row + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += std::exp(in_row[j] - peak);
    const double log_norm = peak + std::log(total);
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] = in_row[j] - log_norm;
  }
  auto node = make_node("log_softmax", x.shape(), std::move(out));
  return finish(node, {x.node()}, [k, rows](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * k;
      const double* dy = self.grad.data() + r * k;
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) total += dy[j];
      double* dx = in.grad.data() + r * k;
      for (std::size_t j = 0; j < k; ++j) dx[j] += dy[j] - std::exp(y[j]) * total;
    }
  });
}

// ---- shape ----------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape new_shape) {
  require_defined(x, "reshape");
  if (shape_numel(new_shape) != x.numel()) {
    dim_error("reshape", x.shape(), new_shape);
  }
  auto node = make_node("reshape", std::move(new_shape),
                        std::vector<double>(x.data().begin(), x.data().end()));
  return finish(node, {x.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    kernels::active().axpy(1.0, self.grad.data(), in.grad.data(),
                           self.grad.size());
  });
}

Tensor sum_axis(const Tensor& x, std::size_t axis) {
  require_defined(x, "sum_axis");
  if (axis >= x.rank()) {
    throw DimensionError("sum_axis: axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str(x.shape()));
  }
  const auto s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto src = x.data();
  const auto& k = kernels::active();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t a = 0; a < s.extent; ++a) {
      k.axpy(1.0, src.data() + (o * s.extent + a) * s.inner,
             out.data() + o * s.inner, s.inner);
    }
  }
  auto node = make_node("sum_axis", std::move(out_shape), std::move(out));
  return finish(node, {x.node()}, [s](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    const auto& k = kernels::active();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t a = 0; a < s.extent; ++a) {
        k.axpy(1.0, self.grad.data() + o * s.inner,
               in.grad.data() + (o * s.extent + a) * s.inner, s.inner);
      }
    }
  });
}

Tensor sum_all(const Tensor& x) {
  require_defined(x, "sum_all");
  const double total = kernels::active().sum(x.data().data(), x.numel());
  auto node = make_node("sum_all", {}, {total});
  return finish(node, {x.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    const double g = self.grad[0];
    for (auto& v : in.grad) v += g;
  });
}

Tensor mean_all(const Tensor& x) {
  if (x.numel() == 0) throw ContractError("mean_all: empty tensor");
  return scale(sum_all(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin,
             std::size_t end) {
  require_defined(x, "slice");
  if (axis >= x.rank() || begin > end || end > x.shape()[axis]) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") on axis " +
                         std::to_string(axis) + " of shape " +
                         shape_str(x.shape()));
  }
  const auto s = split_at(x.shape(), axis);
  const std::size_t width = end - begin;
  Shape out_shape = x.shape();
  out_shape[axis] = width;
  std::vector<double> out(s.outer * width * s.inner);
  const auto src = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    const double* from = src.data() + (o * s.extent + begin) * s.inner;
    std::copy(from, from + width * s.inner, out.data() + o * width * s.inner);
  }
  auto node = make_node("slice", std::move(out_shape), std::move(out));
  return finish(node, {x.node()}, [s, begin, width](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    const auto& k = kernels::active();
    for (std::size_t o = 0; o < s.outer; ++o) {
      k.axpy(1.0, self.grad.data() + o * width * s.inner,
             in.grad.data() + (o * s.extent + begin) * s.inner,
             width * s.inner);
    }
  });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  for (const auto& p : parts) require_defined(p, "concat");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    Shape probe = p.shape();
    if (probe.size() != first.size()) dim_error("concat", first, probe);
    probe[axis] = first[axis];
    if (probe != first) dim_error("concat", first, p.shape());
    out_shape[axis] += p.shape()[axis];
  }
  const auto s = split_at(out_shape, axis);
  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t width = p.shape()[axis] * s.inner;
    const auto src = p.data();
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy(src.data() + o * width, src.data() + (o + 1) * width,
                out.data() + o * s.extent * s.inner + offset * s.inner);
    }
    offset += p.shape()[axis];
  }
  std::vector<NodePtr> inputs;
  for (const auto& p : parts) inputs.push_back(p.node());
  auto node = make_node("concat", std::move(out_shape), std::move(out));
  return finish(node, std::move(inputs), [s, axis, offsets](Node& self) {
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < self.inputs.size(); ++i) {
      Node& in = *self.inputs[i];
      if (!in.requires_grad) continue;
      in.ensure_grad();
      const std::size_t width = in.shape[axis] * s.inner;
      for (std::size_t o = 0; o < s.outer; ++o) {
        k.axpy(1.0,
               self.grad.data() + o * s.extent * s.inner + offsets[i] * s.inner,
               in.grad.data() + o * width, width);
      }
    }
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_defined(table, "gather_rows");
  if (table.rank() != 2) {
    throw DimensionError("gather_rows: table must be rank 2, got " +
                         shape_str(table.shape()));
  }
  const std::size_t rows = table.dim(0), width = table.dim(1);
  std::vector<double> out(ids.size() * width);
  const auto src = table.data();
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] >= rows) {
      throw ContractError("gather_rows: row " + std::to_string(ids[t]) +
                          " out of range for " + std::to_string(rows) +
                          " rows");
    }
    std::copy(src.data() + ids[t] * width, src.data() + (ids[t] + 1) * width,
              out.data() + t * width);
  }
  std::vector<std::size_t> index(ids.begin(), ids.end());
  auto node = make_node("gather_rows", {ids.size(), width}, std::move(out));
  return finish(node, {table.node()}, [index, width](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    const auto& k = kernels::active();
    for (std::size_t t = 0; t < index.size(); ++t) {
      k.axpy(1.0, self.grad.data() + t * width,
             in.grad.data() + index[t] * width, width);
    }
  });
}

// ---- gradient checking ----------------------------------------------------

namespace {

double checked_value(const Tensor& loss) {
  const double v = loss.item();
  if (!std::isfinite(v)) {
    throw NumericError("finite_diff_check: loss is not finite");
  }
  return v;
}

}  // namespace

GradCheckReport finite_diff_report(const std::function<Tensor()>& loss_fn,
                                   std::span<const NamedTensor> params,
                                   double h) {
  if (!(h > 0.0)) throw ContractError("finite_diff_check: h must be positive");
  std::vector<Tensor> handles;
  for (const auto& p : params) {
    handles.push_back(p.tensor);
    handles.back().zero_grad();
  }
  const Tensor loss = loss_fn();
  checked_value(loss);
  backward(loss);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& t = handles[pi];
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    GradCheckEntry entry{params[pi].name, 0.0, 0, 0.0, 0.0};
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + h;
      const double plus = checked_value(loss_fn());
      values[i] = original - h;
      const double minus = checked_value(loss_fn());
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * h);
      const double err = std::abs(analytic[i] - numeric) /
                         std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
      if (err > entry.max_relative_error) {
        entry.max_relative_error = err;
        entry.worst_index = i;
        entry.worst_analytic = analytic[i];
        entry.worst_numeric = numeric;
      }
    }
    report.max_relative_error =
        std::max(report.max_relative_error, entry.max_relative_error);
    report.per_tensor.push_back(std::move(entry));
  }
  return report;
}

double finite_diff_check(const std::function<Tensor()>& loss_fn,
                         std::span<const Tensor> params, double h) {
  std::vector<NamedTensor> named;
  for (std::size_t i = 0; i < params.size(); ++i) {
    named.push_back({"param" + std::to_string(i), params[i]});
  }
  return finite_diff_report(loss_fn, named, h).max_relative_error;
}

}  // namespace qlsc
