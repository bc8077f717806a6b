// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major double tensors with define-by-run reverse-mode autodiff.
//
// Every operation on tensors that require gradients links its output to its
// inputs; the graph lives as long as the output handle does. backward() walks
// the graph reachable from a scalar loss in reverse topological order and
// accumulates gradients into every tensor that requires them.
//
// Broadcasting in binary ops is limited to two cases: one operand is a
// single element, or one operand's shape is a trailing suffix of the other's.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qlsc/errors.hpp"

namespace qlsc {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  std::uint64_t id = 0;
  const char* op = "leaf";
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into inputs' grads.
  std::function<void(Node&)> backward;

  void ensure_grad();
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor ones(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  // Direct write access, meant for optimizers and initializers acting on
  // leaf parameters between forward passes.
  std::span<double> mutable_data() { return node_->value; }

  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const { return node_->requires_grad; }
  // Zeros when nothing has been accumulated yet.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Same values, no graph history, requires_grad = false.
  Tensor detach() const;

  std::uint64_t id() const { return node_->id; }
  const char* op_name() const { return node_->op; }

  // Internal; used by operation implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// One recorded operation as seen from a loss tensor.
struct RecordedOp {
  std::uint64_t output_id;
  std::vector<std::uint64_t> input_ids;
  std::string op;
};

/// The operations reachable from a root, inputs before outputs, each once.
struct ComputationRecord {
  std::vector<RecordedOp> ops;
};

ComputationRecord record_of(const Tensor& root);

/// Accumulates d(loss)/d(t) into every reachable t with requires_grad.
/// Throws ContractError unless loss holds exactly one element.
void backward(const Tensor& loss);

// ---- linear algebra -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// out[k, j] = sum_t w[k, t] * (h[j, t] - c[j, k]) for w: K x L, h: N x L,
/// c: N x K. Each difference is formed before weighting, so coinciding h and
/// c columns contribute exactly zero.
Tensor weighted_residual_sum(const Tensor& w, const Tensor& h, const Tensor& c);

// ---- elementwise ----------------------------------------------------------

enum class Elementwise { kSigmoid, kTanh, kAdd, kSub, kMul, kScale };

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);

/// Dispatch by kind. Unary kinds take `a` only; kScale reads `factor`.
Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b = {},
                   double factor = 1.0);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// ---- normalization --------------------------------------------------------

Tensor softmax_last_axis(const Tensor& x);
Tensor log_softmax_last_axis(const Tensor& x);

// ---- shape ----------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape new_shape);
Tensor sum_axis(const Tensor& x, std::size_t axis);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
/// Elements [begin, end) along `axis`.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin,
             std::size_t end);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
/// Rows of a 2-D table: out[t, :] = table[ids[t], :]. ContractError when an
/// id is out of range.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);

// ---- gradient checking ----------------------------------------------------

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct GradCheckEntry {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::vector<GradCheckEntry> per_tensor;
};

/// Compares backward() against central differences of `loss_fn` for every
/// entry of every tensor in `params`. The relative error of an entry is
/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
/// Throws NumericError if loss_fn returns a non-finite value.
GradCheckReport finite_diff_report(const std::function<Tensor()>& loss_fn,
                                   std::span<const NamedTensor> params,
                                   double h = 1e-5);

double finite_diff_check(const std::function<Tensor()>& loss_fn,
                         std::span<const Tensor> params, double h = 1e-5);

}  // namespace qlsc
