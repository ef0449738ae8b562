/* Copyright 2026 The AVVP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef AVVP_TENSOR_H_
#define AVVP_TENSOR_H_

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace avvp {

using Shape = std::vector<std::size_t>;

std::string ShapeToString(const Shape& shape);

// Raised for any shape contract violation; the message names the primitive
// and the offending shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a computation produces or receives a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major tensor of rank 0, 1 or 2. Rank 0 is a scalar with one
// element.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor Scalar(double v) { return Tensor({}, {v}); }
  static Tensor Zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor Filled(Shape shape, double v);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  // rows()/cols() treat a rank-1 tensor as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& vec() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return values_[r * cols() + c];
  }
  double item() const;

  bool AllFinite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Ordered record of primitive applications. Nodes are appended in evaluation
// order, so inputs always precede their consumers and Backward() is a single
// reverse sweep.
//
// A tape built with record=false evaluates forward values with the exact same
// arithmetic but stores no backward closures.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A trainable input. Its gradient is available after Backward().
  Var Leaf(Tensor value);
  // An input that never receives a gradient.
  Var Constant(Tensor value);

  const Tensor& value(Var v) const;
  // Gradient accumulated into `v` by the last Backward(). Zero-filled when
  // the node did not influence the loss.
  Tensor grad(Var v) const;

  // Reverse sweep from a scalar `loss`. Gradients from earlier sweeps are
  // discarded.
  void Backward(Var loss);

  bool recording() const { return record_; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Used by primitive implementations.
  using BackwardFn = std::function<void(Tape&, int self)>;
  Var Push(Tensor value, std::vector<int> inputs, BackwardFn backward);
  bool NeedsGrad(Var v) const { return nodes_[v.id].needs_grad; }
  const Tensor& node_grad(int id) const { return nodes_[id].grad; }
  // Adds `g` into the gradient buffer of `id`, allocating on first touch.
  void Accumulate(int id, std::span<const double> g);
  void Accumulate(int id, std::size_t index, double g);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<int> inputs;
    BackwardFn backward;
    bool needs_grad = false;
    bool is_leaf = false;
  };

  void CheckOwned(Var v, const char* op) const;

  bool record_;
  std::vector<Node> nodes_;
};

// Primitive set. Every primitive validates shapes and raises ShapeError with
// the primitive name and both shapes on mismatch.

// [n,k] x [k,m] -> [n,m].
Var MatMul(Var a, Var b);
// [n,m]^T -> [m,n].
Var Transpose(Var a);
// Elementwise with equal shapes, or [n,m] + [m] (row broadcast).
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Div(Var a, Var b);
Var Scale(Var a, double s);
Var AddScalar(Var a, double s);
Var Sigmoid(Var a);
Var Log(Var a);
// Values outside [lo, hi] are clamped; the gradient there is zero.
Var Clamp(Var a, double lo, double hi);
// Softmax of a rank-2 tensor along `axis` (0: down each column, 1: along
// each row). A rank-1 tensor is normalized as a whole.
Var Softmax(Var a, int axis);
Var Sum(Var a);
Var Mean(Var a);
// Row sums of [n,m] -> [n].
Var RowSum(Var a);
// Row L2 norms of [n,m] -> [n]. The gradient at a zero row is zero.
Var RowNorm(Var a);
// Concatenation of rank-2 tensors along `axis`.
Var Concat(std::span<const Var> parts, int axis);
// Columns [begin, end) of a rank-2 tensor.
Var SliceCols(Var a, std::size_t begin, std::size_t end);

// Central-difference gradient check.
//
// `f` evaluates the objective at `params`; when `grad` is non-null it must
// also write the analytic gradient there. Returns the maximum over
// coordinates of |analytic - numeric| / max(1, |numeric|).
using GradFn =
    std::function<double(std::span<const double> params, std::vector<double>* grad)>;
double GradCheck(const GradFn& f, std::span<const double> params,
                 double epsilon = 1e-5);

}  // namespace avvp

#endif  // AVVP_TENSOR_H_
