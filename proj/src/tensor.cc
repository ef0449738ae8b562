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
#include "avvp/tensor.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace avvp {
namespace {

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

[[noreturn]] void ThrowShape(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   ShapeToString(a) + " and " + ShapeToString(b));
}

[[noreturn]] void ThrowShape(const char* op, const Shape& a,
                             const std::string& what) {
  throw ShapeError(std::string(op) + ": " + what + ", got shape " +
                   ShapeToString(a));
}

Tape& SameTape(const char* op, Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw std::invalid_argument(std::string(op) +
                                ": operands are not on the same tape");
  }
  return *a.tape;
}

Tape& TapeOf(const char* op, Var a) {
  if (a.tape == nullptr) {
    throw std::invalid_argument(std::string(op) + ": operand has no tape");
  }
  return *a.tape;
}

double StableSigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Elementwise binary op with optional [n,m] (+) [m] row broadcast of b.
struct Broadcast {
  bool row = false;
  std::size_t cols = 0;
};

Broadcast CheckElementwise(const char* op, const Shape& a, const Shape& b) {
  if (a == b) return {};
  if (a.size() == 2 && b.size() == 1 && a[1] == b[0]) return {true, a[1]};
  ThrowShape(op, a, b);
}

}  // namespace

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)), values_(NumElements(shape_), 0.0) {
  if (shape_.size() > 2) ThrowShape("Tensor", shape_, "rank above 2");
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_.size() > 2) ThrowShape("Tensor", shape_, "rank above 2");
  if (values_.size() != NumElements(shape_)) {
    throw ShapeError("Tensor: " + std::to_string(values_.size()) +
                     " values do not fill shape " + ShapeToString(shape_));
  }
}

Tensor Tensor::Filled(Shape shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.values_.begin(), t.values_.end(), v);
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 2) return shape_[0];
  return 1;
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 2) return shape_[1];
  if (shape_.size() == 1) return shape_[0];
  return 1;
}

double Tensor::item() const {
  if (values_.size() != 1) ThrowShape("item", shape_, "expected one element");
  return values_[0];
}

bool Tensor::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::Leaf(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = record_;
  node.is_leaf = true;
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Push(Tensor value, std::vector<int> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  if (record_) {
    node.needs_grad = std::any_of(inputs.begin(), inputs.end(),
                                  [&](int i) { return nodes_[i].needs_grad; });
  }
  if (node.needs_grad) {
    node.inputs = std::move(inputs);
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::CheckOwned(Var v, const char* op) const {
  if (v.tape != this || v.id < 0 ||
      static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::invalid_argument(std::string(op) +
                                ": variable does not belong to this tape");
  }
}

const Tensor& Tape::value(Var v) const {
  CheckOwned(v, "value");
  return nodes_[v.id].value;
}

Tensor Tape::grad(Var v) const {
  CheckOwned(v, "grad");
  const Node& node = nodes_[v.id];
  if (node.grad.size() == 0 && node.value.size() != 0) {
    return Tensor::Zeros(node.value.shape());
  }
  return node.grad;
}

void Tape::Accumulate(int id, std::span<const double> g) {
  Node& node = nodes_[id];
  if (!node.needs_grad) return;
  if (node.grad.size() != node.value.size()) {
    node.grad = Tensor::Zeros(node.value.shape());
  }
  auto dst = node.grad.values();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Tape::Accumulate(int id, std::size_t index, double g) {
  Node& node = nodes_[id];
  if (!node.needs_grad) return;
  if (node.grad.size() != node.value.size()) {
    node.grad = Tensor::Zeros(node.value.shape());
  }
  node.grad[index] += g;
}

void Tape::Backward(Var loss) {
  CheckOwned(loss, "Backward");
  if (nodes_[loss.id].value.size() != 1) {
    ThrowShape("Backward", nodes_[loss.id].value.shape(),
               "loss must be a scalar");
  }
  if (!record_) {
    throw std::logic_error("Backward: tape was built with recording disabled");
  }
  for (Node& node : nodes_) node.grad = Tensor();
  Accumulate(loss.id, 0, 1.0);
  for (int i = loss.id; i >= 0; --i) {
    Node& node = nodes_[i];
    if (node.backward && node.grad.size() != 0) node.backward(*this, i);
  }
}

Var MatMul(Var a, Var b) {
  Tape& tape = SameTape("MatMul", a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rank() != 2 || y.rank() != 2 || x.cols() != y.rows()) {
    ThrowShape("MatMul", x.shape(), y.shape());
  }
  const std::size_t n = x.rows(), k = x.cols(), m = y.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x.at(i, p);
      for (std::size_t j = 0; j < m; ++j) out.at(i, j) += xv * y.at(p, j);
    }
  }
  const int ia = a.id, ib = b.id;
  return tape.Push(std::move(out), {ia, ib}, [ia, ib, n, k, m](Tape& t, int self) {
    const Tensor& g = t.node_grad(self);
    const Tensor& x = t.value(Var{&t, ia});
    const Tensor& y = t.value(Var{&t, ib});
    if (t.NeedsGrad(Var{&t, ia})) {
      Tensor gx({n, k});
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += g.at(i, j) * y.at(p, j);
          gx.at(i, p) = s;
        }
      t.Accumulate(ia, gx.values());
    }
    if (t.NeedsGrad(Var{&t, ib})) {
      Tensor gy({k, m});
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double xv = x.at(i, p);
          for (std::size_t j = 0; j < m; ++j) gy.at(p, j) += xv * g.at(i, j);
        }
      t.Accumulate(ib, gy.values());
    }
  });
}

Var Transpose(Var a) {
  Tape& tape = TapeOf("Transpose", a);
  const Tensor& x = a.value();
  if (x.rank() != 2) ThrowShape("Transpose", x.shape(), "expected rank 2");
  const std::size_t n = x.rows(), m = x.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.at(j, i) = x.at(i, j);
  const int ia = a.id;
  return tape.Push(std::move(out), {ia}, [ia, n, m](Tape& t, int self) {
    const Tensor& g = t.node_grad(self);
    Tensor gx({n, m});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) gx.at(i, j) = g.at(j, i);
    t.Accumulate(ia, gx.values());
  });
}

namespace {

enum class BinOp { kAdd, kSub, kMul, kDiv };

Var Binary(const char* name, BinOp op, Var a, Var b) {
  Tape& tape = SameTape(name, a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const Broadcast bc = CheckElementwise(name, x.shape(), y.shape());
  Tensor out(x.shape());
  const std::size_t n = x.size();
  auto yi = [&](std::size_t i) { return bc.row ? i % bc.cols : i; };
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[i], v = y[yi(i)];
    switch (op) {
      case BinOp::kAdd: out[i] = u + v; break;
      case BinOp::kSub: out[i] = u - v; break;
      case BinOp::kMul: out[i] = u * v; break;
      case BinOp::kDiv: out[i] = u / v; break;
    }
  }
  const int ia = a.id, ib = b.id;
  return tape.Push(std::move(out), {ia, ib}, [ia, ib, op, bc, n](Tape& t, int self) {
    const Tensor& g = t.node_grad(self);
    const Tensor& x = t.value(Var{&t, ia});
    const Tensor& y = t.value(Var{&t, ib});
    auto yi = [&](std::size_t i) { return bc.row ? i % bc.cols : i; };
    if (t.NeedsGrad(Var{&t, ia})) {
      Tensor gx(x.shape());
      for (std::size_t i = 0; i < n; ++i) {
        switch (op) {
          case BinOp::kAdd:
          case BinOp::kSub: gx[i] = g[i]; break;
          case BinOp::kMul: gx[i] = g[i] * y[yi(i)]; break;
          case BinOp::kDiv: gx[i] = g[i] / y[yi(i)]; break;
        }
      }
      t.Accumulate(ia, gx.values());
    }
    if (t.NeedsGrad(Var{&t, ib})) {
      Tensor gy(y.shape());
      for (std::size_t i = 0; i < n; ++i) {
        const double v = y[yi(i)];
        switch (op) {
          case BinOp::kAdd: gy[yi(i)] += g[i]; break;
          case BinOp::kSub: gy[yi(i)] -= g[i]; break;
          case BinOp::kMul: gy[yi(i)] += g[i] * x[i]; break;
          case BinOp::kDiv: gy[yi(i)] -= g[i] * x[i] / (v * v); break;
        }
      }
      t.Accumulate(ib, gy.values());
    }
  });
}

// Unary elementwise op; `local` maps (input, output) to d output / d input.
template <typename Fwd, typename Local>
Var Unary(const char* name, Var a, Fwd fwd, Local local) {
  Tape& tape = TapeOf(name, a);
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
  const int ia = a.id;
  return tape.Push(std::move(out), {ia}, [ia, local](Tape& t, int self) {
    const Tensor& g = t.node_grad(self);
    const Tensor& x = t.value(Var{&t, ia});
    const Tensor& y = t.value(Var{&t, self});
    Tensor gx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] = g[i] * local(x[i], y[i]);
    t.Accumulate(ia, gx.values());
  });
}

}  // namespace

Var Add(Var a, Var b) { return Binary("Add", BinOp::kAdd, a, b); }
Var Sub(Var a, Var b) { return Binary("Sub", BinOp::kSub, a, b); }
Var Mul(Var a, Var b) { return Binary("Mul", BinOp::kMul, a, b); }
Var Div(Var a, Var b) { return Binary("Div", BinOp::kDiv, a, b); }

Var Scale(Var a, double s) {
  return Unary(
      "Scale", a, [s](double x) { return x * s; },
      [s](double, double) { return s; });
}

Var AddScalar(Var a, double s) {
  return Unary(
      "AddScalar", a, [s](double x) { return x + s; },
      [](double, double) { return 1.0; });
}

Var Sigmoid(Var a) {
  return Unary("Sigmoid", a, StableSigmoid,
               [](double, double y) { return y * (1.0 - y); });
}

Var Log(Var a) {
  return Unary(
      "Log", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var Clamp(Var a, double lo, double hi) {
  return Unary(
      "Clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var Softmax(Var a, int axis) {
  Tape& tape = TapeOf("Softmax", a);
  const Tensor& x = a.value();
  if (x.rank() == 0 || (x.rank() == 2 && axis != 0 && axis != 1)) {
    ThrowShape("Softmax", x.shape(), "bad axis " + std::to_string(axis));
  }
  // Iterate over independent groups: `groups` groups of `len` elements with
  // element j of group g at g * outer + j * inner.
  std::size_t groups = 1, len = x.size(), outer = 0, inner = 1;
  if (x.rank() == 2) {
    if (axis == 1) {
      groups = x.rows(); len = x.cols(); outer = x.cols(); inner = 1;
    } else {
      groups = x.cols(); len = x.rows(); outer = 1; inner = x.cols();
    }
  }
  Tensor out(x.shape());
  for (std::size_t g = 0; g < groups; ++g) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < len; ++j)
      mx = std::max(mx, x[g * outer + j * inner]);
    double total = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      const double e = std::exp(x[g * outer + j * inner] - mx);
      out[g * outer + j * inner] = e;
      total += e;
    }
    for (std::size_t j = 0; j < len; ++j) out[g * outer + j * inner] /= total;
  }
  const int ia = a.id;
  return tape.Push(std::move(out), {ia},
                   [ia, groups, len, outer, inner](Tape& t, int self) {
    const Tensor& gy = t.node_grad(self);
    const Tensor& y = t.value(Var{&t, self});
    Tensor gx(y.shape());
    for (std::size_t g = 0; g < groups; ++g) {
      double dot = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t i = g * outer + j * inner;
        dot += gy[i] * y[i];
      }
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t i = g * outer + j * inner;
        gx[i] = y[i] * (gy[i] - dot);
      }
    }
    t.Accumulate(ia, gx.values());
  });
}

Var Sum(Var a) {
  Tape& tape = TapeOf("Sum", a);
  const Tensor& x = a.value();
  double s = 0.0;
  for (double v : x.values()) s += v;
  const int ia = a.id;
  return tape.Push(Tensor::Scalar(s), {ia}, [ia](Tape& t, int self) {
    const double g = t.node_grad(self)[0];
    t.Accumulate(ia, Tensor::Filled(t.value(Var{&t, ia}).shape(), g).values());
  });
}

Var Mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) ThrowShape("Mean", a.value().shape(), "empty tensor");
  return Scale(Sum(a), 1.0 / static_cast<double>(n));
}

Var RowSum(Var a) {
  Tape& tape = TapeOf("RowSum", a);
  const Tensor& x = a.value();
  if (x.rank() != 2) ThrowShape("RowSum", x.shape(), "expected rank 2");
  const std::size_t n = x.rows(), m = x.cols();
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i] += x.at(i, j);
  const int ia = a.id;
  return tape.Push(std::move(out), {ia}, [ia, n, m](Tape& t, int self) {
    const Tensor& g = t.node_grad(self);
    Tensor gx({n, m});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) gx.at(i, j) = g[i];
    t.Accumulate(ia, gx.values());
  });
}

Var RowNorm(Var a) {
  Tape& tape = TapeOf("RowNorm", a);
  const Tensor& x = a.value();
  if (x.rank() != 2) ThrowShape("RowNorm", x.shape(), "expected rank 2");
  const std::size_t n = x.rows(), m = x.cols();
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += x.at(i, j) * x.at(i, j);
    out[i] = std::sqrt(s);
  }
  const int ia = a.id;
  return tape.Push(std::move(out), {ia}, [ia, n, m](Tape& t, int self) {
    const Tensor& g = t.node_grad(self);
    const Tensor& x = t.value(Var{&t, ia});
    const Tensor& y = t.value(Var{&t, self});
    Tensor gx({n, m});
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) gx.at(i, j) = g[i] * x.at(i, j) / y[i];
    }
    t.Accumulate(ia, gx.values());
  });
}

Var Concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw ShapeError("Concat: no inputs");
  if (axis != 0 && axis != 1) {
    throw ShapeError("Concat: bad axis " + std::to_string(axis));
  }
  Tape& tape = TapeOf("Concat", parts[0]);
  const Shape& first = parts[0].value().shape();
  if (first.size() != 2) ThrowShape("Concat", first, "expected rank 2");
  std::size_t rows = first[0], cols = first[1];
  for (std::size_t p = 1; p < parts.size(); ++p) {
    SameTape("Concat", parts[0], parts[p]);
    const Shape& s = parts[p].value().shape();
    if (s.size() != 2 || (axis == 0 ? s[1] != first[1] : s[0] != first[0])) {
      ThrowShape("Concat", first, s);
    }
    (axis == 0 ? rows : cols) += s[axis];
  }
  Tensor out({rows, cols});
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (Var v : parts) {
    const Tensor& x = v.value();
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) {
        if (axis == 0) out.at(offset + i, j) = x.at(i, j);
        else out.at(i, offset + j) = x.at(i, j);
      }
    ids.push_back(v.id);
    offsets.push_back(offset);
    offset += axis == 0 ? x.rows() : x.cols();
  }
  std::vector<int> inputs = ids;
  return tape.Push(std::move(out), std::move(inputs),
                   [ids, offsets, axis](Tape& t, int self) {
    const Tensor& g = t.node_grad(self);
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (!t.NeedsGrad(Var{&t, ids[p]})) continue;
      const Tensor& x = t.value(Var{&t, ids[p]});
      Tensor gx(x.shape());
      for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) {
          gx.at(i, j) = axis == 0 ? g.at(offsets[p] + i, j)
                                  : g.at(i, offsets[p] + j);
        }
      t.Accumulate(ids[p], gx.values());
    }
  });
}

Var SliceCols(Var a, std::size_t begin, std::size_t end) {
  Tape& tape = TapeOf("SliceCols", a);
  const Tensor& x = a.value();
  if (x.rank() != 2 || begin >= end || end > x.cols()) {
    ThrowShape("SliceCols", x.shape(),
               "bad column range [" + std::to_string(begin) + ", " +
                   std::to_string(end) + ")");
  }
  const std::size_t n = x.rows(), m = end - begin;
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.at(i, j) = x.at(i, begin + j);
  const int ia = a.id;
  return tape.Push(std::move(out), {ia}, [ia, n, m, begin](Tape& t, int self) {
    const Tensor& g = t.node_grad(self);
    Tensor gx(t.value(Var{&t, ia}).shape());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) gx.at(i, begin + j) = g.at(i, j);
    t.Accumulate(ia, gx.values());
  });
}

double GradCheck(const GradFn& f, std::span<const double> params,
                 double epsilon) {
  std::vector<double> analytic(params.size(), 0.0);
  const double base = f(params, &analytic);
  if (!std::isfinite(base)) {
    throw NumericalError("GradCheck: objective is not finite at the base point");
  }
  if (analytic.size() != params.size()) {
    throw ShapeError("GradCheck: gradient has " + std::to_string(analytic.size()) +
                     " entries for " + std::to_string(params.size()) +
                     " parameters");
  }
  std::vector<double> x(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + epsilon;
    const double up = f(x, nullptr);
    x[i] = saved - epsilon;
    const double down = f(x, nullptr);
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    if (!std::isfinite(numeric) || !std::isfinite(analytic[i])) {
      throw NumericalError("GradCheck: non-finite value at coordinate " +
                           std::to_string(i));
    }
    const double err =
        std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace avvp
