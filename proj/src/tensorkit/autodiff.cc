// src/tensorkit/autodiff.cc

// Copyright 2026 The BeamSpeech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "beamspeech/autodiff.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace beamspeech {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

const Tensor &Var::value() const { return tape_->Value(id_); }
bool Var::requires_grad() const { return tape_->RequiresGrad(id_); }

Var Tape::Constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::Parameter(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::Record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const Var &v : inputs) {
    if (v.tape() != this) throw std::logic_error("Tape::Record: input from another tape");
    if (nodes_[v.id()].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) {
    n.inputs.reserve(inputs.size());
    for (const Var &v : inputs) n.inputs.push_back(v.id());
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::Backward(Var root) {
  if (root.tape() != this) throw std::logic_error("Tape::Backward: foreign root");
  if (nodes_[root.id()].value.size() != 1)
    throw ShapeError("backward", "root must be scalar, got " +
                                     ShapeString(nodes_[root.id()].value.shape()));
  for (Node &n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  Node &r = nodes_[root.id()];
  r.grad = Tensor(r.value.shape(), 1.0);
  r.has_grad = true;

  std::vector<Tensor *> in_grads;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node &n = nodes_[id];
    if (!n.has_grad || !n.requires_grad || !n.backward) continue;
    in_grads.assign(n.inputs.size(), nullptr);
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      Node &in = nodes_[n.inputs[i]];
      if (!in.requires_grad) continue;
      if (!in.has_grad) {
        in.grad = Tensor(in.value.shape(), 0.0);
        in.has_grad = true;
      }
      in_grads[i] = &in.grad;
    }
    n.backward(n.grad, in_grads);
  }
}

Tensor Tape::Grad(Var v) const {
  const Node &n = nodes_.at(v.id());
  if (n.has_grad) return n.grad;
  return Tensor(n.value.shape(), 0.0);
}

namespace ad {
namespace {

Tape &TapeOf(Var a) {
  if (!a.valid()) throw std::logic_error("autodiff: invalid Var");
  return *a.tape();
}

Tape &TapeOf(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::logic_error("autodiff: operands on different tapes");
  return TapeOf(a);
}

// Output shape for numpy-style broadcasting, or throws.
Shape BroadcastShape(const char *op, const Shape &a, const Shape &b) {
  std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1)
      throw ShapeError(op, "cannot broadcast " + ShapeString(a) + " with " +
                               ShapeString(b) + " (axis " + std::to_string(i) + ")");
    out[i] = std::max(da, db);
  }
  return out;
}

// Flat input index for every flat output index. Empty when `in == out`.
std::shared_ptr<const std::vector<std::size_t>> BroadcastMap(const Shape &in,
                                                             const Shape &out) {
  if (in == out) return nullptr;
  std::size_t n = NumElements(out);
  auto map = std::make_shared<std::vector<std::size_t>>(n);
  std::size_t in_n = NumElements(in);
  // Fast path: `in` equals a trailing block of `out` (bias-style broadcast).
  bool suffix = in.size() <= out.size() &&
                std::equal(in.begin(), in.end(), out.end() - in.size());
  if (suffix || in_n == 1) {
    for (std::size_t i = 0; i < n; ++i) (*map)[i] = in_n == 1 ? 0 : i % in_n;
    return map;
  }
  std::size_t rank = out.size();
  std::vector<std::size_t> in_stride(rank, 0);
  std::size_t s = 1;
  for (std::size_t k = rank; k-- > 0;) {
    std::size_t ai = k + in.size();
    if (ai < rank) continue;  // leading axis absent from `in`
    std::size_t d = in[ai - rank];
    in_stride[k] = d == 1 ? 0 : s;
    s *= d;
  }
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < rank; ++k) off += idx[k] * in_stride[k];
    (*map)[i] = off;
    for (std::size_t k = rank; k-- > 0;) {
      if (++idx[k] < out[k]) break;
      idx[k] = 0;
    }
  }
  return map;
}

// f(x, y) forward; da(x, y), db(x, y) partial derivatives.
template <class F, class DA, class DB>
Var Binary(const char *op, Var a, Var b, F f, DA da, DB db) {
  Tape &tape = TapeOf(a, b);
  const Tensor &av = a.value();
  const Tensor &bv = b.value();
  Shape out_shape = BroadcastShape(op, av.shape(), bv.shape());
  auto amap = BroadcastMap(av.shape(), out_shape);
  auto bmap = BroadcastMap(bv.shape(), out_shape);
  Tensor out(out_shape);
  std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    double x = av[amap ? (*amap)[i] : i];
    double y = bv[bmap ? (*bmap)[i] : i];
    out[i] = f(x, y);
  }
  return tape.Record(
      std::move(out), {a, b},
      [a, b, amap, bmap, da, db](const Tensor &g, std::vector<Tensor *> &in) {
        const Tensor &av = a.value();
        const Tensor &bv = b.value();
        for (std::size_t i = 0; i < g.size(); ++i) {
          std::size_t ia = amap ? (*amap)[i] : i;
          std::size_t ib = bmap ? (*bmap)[i] : i;
          double x = av[ia], y = bv[ib];
          if (in[0]) (*in[0])[ia] += g[i] * da(x, y);
          if (in[1]) (*in[1])[ib] += g[i] * db(x, y);
        }
      });
}

// f(x) forward; df(x, y) derivative given input x and output y.
template <class F, class DF>
Var Unary(Var a, F f, DF df) {
  Tape &tape = TapeOf(a);
  const Tensor &av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  Tensor y = out;
  return tape.Record(std::move(out), {a},
                     [a, y, df](const Tensor &g, std::vector<Tensor *> &in) {
                       const Tensor &av = a.value();
                       for (std::size_t i = 0; i < g.size(); ++i)
                         (*in[0])[i] += g[i] * df(av[i], y[i]);
                     });
}

// outer * axis_dim * inner decomposition of a shape around one axis.
struct AxisSplit {
  std::size_t outer = 1, dim = 1, inner = 1;
};

AxisSplit SplitAt(const Shape &s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.dim = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

}  // namespace

Var Add(Var a, Var b) {
  return Binary("add", a, b, [](double x, double y) { return x + y; },
                [](double, double) { return 1.0; },
                [](double, double) { return 1.0; });
}

Var Sub(Var a, Var b) {
  return Binary("sub", a, b, [](double x, double y) { return x - y; },
                [](double, double) { return 1.0; },
                [](double, double) { return -1.0; });
}

Var Mul(Var a, Var b) {
  return Binary("mul", a, b, [](double x, double y) { return x * y; },
                [](double, double y) { return y; },
                [](double x, double) { return x; });
}

Var Div(Var a, Var b) {
  return Binary("div", a, b, [](double x, double y) { return x / y; },
                [](double, double y) { return 1.0 / y; },
                [](double x, double y) { return -x / (y * y); });
}

Var Neg(Var a) {
  return Unary(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var Scale(Var a, double s) {
  return Unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var AddScalar(Var a, double s) {
  return Unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var Exp(Var a) {
  return Unary(a, [](double x) { return std::exp(x); },
               [](double, double y) { return y; });
}

Var Log(Var a) {
  return Unary(a, [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Var Tanh(Var a) {
  return Unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var Sigmoid(Var a) {
  return Unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var Square(Var a) {
  return Unary(a, [](double x) { return x * x; },
               [](double x, double) { return 2.0 * x; });
}

Var ClampMin(Var a, double floor) {
  return Unary(a, [floor](double x) { return x < floor ? floor : x; },
               [floor](double x, double) { return x < floor ? 0.0 : 1.0; });
}

Var MatMul(Var a, Var b) {
  Tape &tape = TapeOf(a, b);
  const Tensor &av = a.value();
  const Tensor &bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
    throw ShapeError("matmul", ShapeString(av.shape()) + " x " + ShapeString(bv.shape()));
  std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  MutMap(out.data(), m, n).noalias() = ConstMap(av.data(), m, k) * ConstMap(bv.data(), k, n);
  return tape.Record(std::move(out), {a, b},
                     [a, b, m, k, n](const Tensor &g, std::vector<Tensor *> &in) {
                       ConstMap G(g.data(), m, n);
                       if (in[0])
                         MutMap(in[0]->data(), m, k).noalias() +=
                             G * ConstMap(b.value().data(), k, n).transpose();
                       if (in[1])
                         MutMap(in[1]->data(), k, n).noalias() +=
                             ConstMap(a.value().data(), m, k).transpose() * G;
                     });
}

Var BatchMatMul(Var a, Var b, bool trans_a, bool trans_b) {
  Tape &tape = TapeOf(a, b);
  const Tensor &av = a.value();
  const Tensor &bv = b.value();
  auto fail = [&]() {
    return ShapeError("batch_matmul", ShapeString(av.shape()) + (trans_a ? "^T" : "") +
                                          " x " + ShapeString(bv.shape()) +
                                          (trans_b ? "^T" : ""));
  };
  if (av.rank() != 3 || (bv.rank() != 3 && bv.rank() != 2)) throw fail();
  bool shared_b = bv.rank() == 2;
  std::size_t batch = av.dim(0);
  if (!shared_b && bv.dim(0) != batch) throw fail();
  std::size_t ar = av.dim(1), ac = av.dim(2);
  std::size_t br = bv.dim(bv.rank() - 2), bc = bv.dim(bv.rank() - 1);
  std::size_t m = trans_a ? ac : ar, k = trans_a ? ar : ac;
  std::size_t kb = trans_b ? bc : br, n = trans_b ? br : bc;
  if (k != kb) throw fail();
  Tensor out({batch, m, n});
  std::size_t a_step = ar * ac, b_step = shared_b ? 0 : br * bc;
  for (std::size_t i = 0; i < batch; ++i) {
    ConstMap A(av.data() + i * a_step, ar, ac);
    ConstMap B(bv.data() + i * b_step, br, bc);
    MutMap C(out.data() + i * m * n, m, n);
    if (!trans_a && !trans_b) C.noalias() = A * B;
    else if (trans_a && !trans_b) C.noalias() = A.transpose() * B;
    else if (!trans_a && trans_b) C.noalias() = A * B.transpose();
    else C.noalias() = A.transpose() * B.transpose();
  }
  return tape.Record(
      std::move(out), {a, b},
      [a, b, batch, ar, ac, br, bc, m, n, a_step, b_step, trans_a, trans_b](
          const Tensor &g, std::vector<Tensor *> &in) {
        const Tensor &av = a.value();
        const Tensor &bv = b.value();
        for (std::size_t i = 0; i < batch; ++i) {
          ConstMap G(g.data() + i * m * n, m, n);
          ConstMap A(av.data() + i * a_step, ar, ac);
          ConstMap B(bv.data() + i * b_step, br, bc);
          // op(A) = trans_a ? A^T : A, likewise for B; C = op(A) op(B).
          if (in[0]) {
            MutMap dA(in[0]->data() + i * a_step, ar, ac);
            if (!trans_a && !trans_b) dA.noalias() += G * B.transpose();
            else if (!trans_a && trans_b) dA.noalias() += G * B;
            else if (trans_a && !trans_b) dA.noalias() += B * G.transpose();
            else dA.noalias() += B.transpose() * G.transpose();
          }
          if (in[1]) {
            MutMap dB(in[1]->data() + i * b_step, br, bc);
            if (!trans_a && !trans_b) dB.noalias() += A.transpose() * G;
            else if (trans_a && !trans_b) dB.noalias() += A * G;
            else if (!trans_a && trans_b) dB.noalias() += G.transpose() * A;
            else dB.noalias() += G.transpose() * A.transpose();
          }
        }
      });
}

Var Reshape(Var a, Shape shape) {
  Tape &tape = TapeOf(a);
  Tensor out = a.value().Reshaped(std::move(shape));
  return tape.Record(std::move(out), {a},
                     [](const Tensor &g, std::vector<Tensor *> &in) {
                       for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
                     });
}

Var Transpose(Var a) {
  if (a.value().rank() != 2)
    throw ShapeError("transpose", "expects rank 2, got " + ShapeString(a.shape()));
  return Permute(a, {1, 0});
}

Var Permute(Var a, std::vector<std::size_t> perm) {
  Tape &tape = TapeOf(a);
  const Tensor &av = a.value();
  std::size_t rank = av.rank();
  std::vector<std::size_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted.size() != rank || sorted[i] != i)
      throw ShapeError("permute", "invalid permutation for " + ShapeString(av.shape()));
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = av.dim(perm[i]);
  std::vector<std::size_t> in_stride(rank);
  std::size_t s = 1;
  for (std::size_t k = rank; k-- > 0;) {
    in_stride[k] = s;
    s *= av.dim(k);
  }
  auto map = std::make_shared<std::vector<std::size_t>>(av.size());
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t i = 0; i < av.size(); ++i) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < rank; ++k) off += idx[k] * in_stride[perm[k]];
    (*map)[i] = off;
    for (std::size_t k = rank; k-- > 0;) {
      if (++idx[k] < out_shape[k]) break;
      idx[k] = 0;
    }
  }
  Tensor out(out_shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[(*map)[i]];
  return tape.Record(std::move(out), {a},
                     [map](const Tensor &g, std::vector<Tensor *> &in) {
                       for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[(*map)[i]] += g[i];
                     });
}

Var Concat(const std::vector<Var> &parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat", "no inputs");
  Tape &tape = TapeOf(parts[0]);
  const Shape &s0 = parts[0].shape();
  if (axis >= s0.size()) throw ShapeError("concat", "axis out of range");
  Shape out_shape = s0;
  out_shape[axis] = 0;
  for (const Var &p : parts) {
    const Shape &s = p.shape();
    if (p.tape() != &tape) throw std::logic_error("concat: mixed tapes");
    if (s.size() != s0.size())
      throw ShapeError("concat", "rank mismatch " + ShapeString(s0) + " vs " + ShapeString(s));
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != s0[i])
        throw ShapeError("concat", "dim " + std::to_string(i) + " mismatch " +
                                       ShapeString(s0) + " vs " + ShapeString(s));
    out_shape[axis] += s[axis];
  }
  AxisSplit os = SplitAt(out_shape, axis);
  Tensor out(out_shape);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var &p : parts) {
    offsets.push_back(off);
    const Tensor &pv = p.value();
    std::size_t d = pv.dim(axis);
    for (std::size_t o = 0; o < os.outer; ++o)
      std::copy_n(pv.data() + o * d * os.inner, d * os.inner,
                  out.data() + (o * os.dim + off) * os.inner);
    off += d;
  }
  return tape.Record(std::move(out), parts,
                     [parts, offsets, os, axis](const Tensor &g, std::vector<Tensor *> &in) {
                       for (std::size_t p = 0; p < parts.size(); ++p) {
                         if (!in[p]) continue;
                         std::size_t d = parts[p].dim(axis);
                         for (std::size_t o = 0; o < os.outer; ++o) {
                           const double *src = g.data() + (o * os.dim + offsets[p]) * os.inner;
                           double *dst = in[p]->data() + o * d * os.inner;
                           for (std::size_t i = 0; i < d * os.inner; ++i) dst[i] += src[i];
                         }
                       }
                     });
}

Var Slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  Tape &tape = TapeOf(a);
  const Tensor &av = a.value();
  if (axis >= av.rank() || begin >= end || end > av.dim(axis))
    throw ShapeError("slice", "range [" + std::to_string(begin) + "," + std::to_string(end) +
                                  ") on axis " + std::to_string(axis) + " of " +
                                  ShapeString(av.shape()));
  AxisSplit is = SplitAt(av.shape(), axis);
  Shape out_shape = av.shape();
  out_shape[axis] = end - begin;
  std::size_t d = end - begin;
  Tensor out(out_shape);
  for (std::size_t o = 0; o < is.outer; ++o)
    std::copy_n(av.data() + (o * is.dim + begin) * is.inner, d * is.inner,
                out.data() + o * d * is.inner);
  return tape.Record(std::move(out), {a},
                     [is, begin, d](const Tensor &g, std::vector<Tensor *> &in) {
                       for (std::size_t o = 0; o < is.outer; ++o) {
                         const double *src = g.data() + o * d * is.inner;
                         double *dst = in[0]->data() + (o * is.dim + begin) * is.inner;
                         for (std::size_t i = 0; i < d * is.inner; ++i) dst[i] += src[i];
                       }
                     });
}

Var Take(Var a, const std::vector<std::size_t> &indices) {
  Tape &tape = TapeOf(a);
  const Tensor &av = a.value();
  if (indices.empty()) throw ShapeError("take", "empty index list");
  std::size_t row = av.size() / av.dim(0);
  for (auto i : indices)
    if (i >= av.dim(0))
      throw ShapeError("take", "index " + std::to_string(i) + " out of range for " +
                                   ShapeString(av.shape()));
  Shape out_shape = av.shape();
  out_shape[0] = indices.size();
  Tensor out(out_shape);
  for (std::size_t r = 0; r < indices.size(); ++r)
    std::copy_n(av.data() + indices[r] * row, row, out.data() + r * row);
  return tape.Record(std::move(out), {a},
                     [indices, row](const Tensor &g, std::vector<Tensor *> &in) {
                       for (std::size_t r = 0; r < indices.size(); ++r)
                         for (std::size_t j = 0; j < row; ++j)
                           (*in[0])[indices[r] * row + j] += g[r * row + j];
                     });
}

Var PickPerRow(Var a, const std::vector<std::size_t> &index) {
  Tape &tape = TapeOf(a);
  const Tensor &av = a.value();
  if (av.rank() != 2 || index.size() != av.dim(0))
    throw ShapeError("pick", ShapeString(av.shape()) + " with " +
                                 std::to_string(index.size()) + " indices");
  std::size_t k = av.dim(1);
  Tensor out({index.size()});
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= k)
      throw ShapeError("pick", "index " + std::to_string(index[i]) + " >= " + std::to_string(k));
    out[i] = av[i * k + index[i]];
  }
  return tape.Record(std::move(out), {a},
                     [index, k](const Tensor &g, std::vector<Tensor *> &in) {
                       for (std::size_t i = 0; i < index.size(); ++i)
                         (*in[0])[i * k + index[i]] += g[i];
                     });
}

Var Diagonal(Var a) {
  Tape &tape = TapeOf(a);
  const Tensor &av = a.value();
  if (av.rank() != 3 || av.dim(1) != av.dim(2))
    throw ShapeError("diagonal", "expects [B,C,C], got " + ShapeString(av.shape()));
  std::size_t b = av.dim(0), c = av.dim(1);
  Tensor out({b, c});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) = av.at(i, j, j);
  return tape.Record(std::move(out), {a},
                     [b, c](const Tensor &g, std::vector<Tensor *> &in) {
                       for (std::size_t i = 0; i < b; ++i)
                         for (std::size_t j = 0; j < c; ++j) in[0]->at(i, j, j) += g.at(i, j);
                     });
}

Var Sum(Var a) {
  Tape &tape = TapeOf(a);
  const Tensor &av = a.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i];
  return tape.Record(Tensor::Scalar(s), {a},
                     [](const Tensor &g, std::vector<Tensor *> &in) {
                       double gv = g[0];
                       for (auto &v : in[0]->vec()) v += gv;
                     });
}

Var Mean(Var a) { return Scale(Sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var SumAxis(Var a, std::size_t axis, bool keep_dim) {
  Tape &tape = TapeOf(a);
  const Tensor &av = a.value();
  if (axis >= av.rank())
    throw ShapeError("sum_axis", "axis " + std::to_string(axis) + " for " + ShapeString(av.shape()));
  AxisSplit s = SplitAt(av.shape(), axis);
  Shape out_shape;
  for (std::size_t i = 0; i < av.rank(); ++i) {
    if (i != axis) out_shape.push_back(av.dim(i));
    else if (keep_dim) out_shape.push_back(1);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor out(out_shape, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t d = 0; d < s.dim; ++d)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += av[(o * s.dim + d) * s.inner + i];
  return tape.Record(std::move(out), {a},
                     [s](const Tensor &g, std::vector<Tensor *> &in) {
                       for (std::size_t o = 0; o < s.outer; ++o)
                         for (std::size_t d = 0; d < s.dim; ++d)
                           for (std::size_t i = 0; i < s.inner; ++i)
                             (*in[0])[(o * s.dim + d) * s.inner + i] += g[o * s.inner + i];
                     });
}

Var MeanAxis(Var a, std::size_t axis, bool keep_dim) {
  return Scale(SumAxis(a, axis, keep_dim), 1.0 / static_cast<double>(a.dim(axis)));
}

Var Softmax(Var a, double temperature) {
  Tape &tape = TapeOf(a);
  const Tensor &av = a.value();
  std::size_t k = av.dim(av.rank() - 1);
  std::size_t rows = av.size() / k;
  Tensor out(av.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double *x = av.data() + r * k;
    double *y = out.data() + r * k;
    double mx = temperature * x[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, temperature * x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += (y[j] = std::exp(temperature * x[j] - mx));
    for (std::size_t j = 0; j < k; ++j) y[j] /= z;
  }
  Tensor y = out;
  return tape.Record(std::move(out), {a},
                     [y, k, rows, temperature](const Tensor &g, std::vector<Tensor *> &in) {
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double *yr = y.data() + r * k;
                         const double *gr = g.data() + r * k;
                         double dot = 0.0;
                         for (std::size_t j = 0; j < k; ++j) dot += gr[j] * yr[j];
                         double *d = in[0]->data() + r * k;
                         for (std::size_t j = 0; j < k; ++j)
                           d[j] += temperature * yr[j] * (gr[j] - dot);
                       }
                     });
}

Var LogSoftmax(Var a) {
  Tape &tape = TapeOf(a);
  const Tensor &av = a.value();
  std::size_t k = av.dim(av.rank() - 1);
  std::size_t rows = av.size() / k;
  Tensor out(av.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double *x = av.data() + r * k;
    double mx = *std::max_element(x, x + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(x[j] - mx);
    double lse = mx + std::log(z);
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] = x[j] - lse;
  }
  Tensor y = out;
  return tape.Record(std::move(out), {a},
                     [y, k, rows](const Tensor &g, std::vector<Tensor *> &in) {
                       for (std::size_t r = 0; r < rows; ++r) {
                         double gs = 0.0;
                         for (std::size_t j = 0; j < k; ++j) gs += g[r * k + j];
                         for (std::size_t j = 0; j < k; ++j)
                           (*in[0])[r * k + j] += g[r * k + j] - std::exp(y[r * k + j]) * gs;
                       }
                     });
}

Var Conv1d(Var signal, Var filters) {
  Tape &tape = TapeOf(signal, filters);
  const Tensor &sv = signal.value();
  const Tensor &fv = filters.value();
  if (sv.rank() != 1 || fv.rank() != 2 || fv.dim(1) % 2 == 0)
    throw ShapeError("conv1d", "signal " + ShapeString(sv.shape()) + ", filters " +
                                   ShapeString(fv.shape()) + " (need [L] and [K, odd W])");
  std::size_t len = sv.dim(0), nf = fv.dim(0), width = fv.dim(1);
  long half = static_cast<long>(width / 2);
  Tensor out({len, nf}, 0.0);
  for (std::size_t l = 0; l < len; ++l)
    for (std::size_t k = 0; k < nf; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < width; ++j) {
        long src = static_cast<long>(l) + static_cast<long>(j) - half;
        if (src < 0 || src >= static_cast<long>(len)) continue;
        acc += fv.at(k, j) * sv[static_cast<std::size_t>(src)];
      }
      out.at(l, k) = acc;
    }
  return tape.Record(
      std::move(out), {signal, filters},
      [signal, filters, len, nf, width, half](const Tensor &g, std::vector<Tensor *> &in) {
        const Tensor &sv = signal.value();
        const Tensor &fv = filters.value();
        for (std::size_t l = 0; l < len; ++l)
          for (std::size_t k = 0; k < nf; ++k) {
            double gv = g.at(l, k);
            if (gv == 0.0) continue;
            for (std::size_t j = 0; j < width; ++j) {
              long src = static_cast<long>(l) + static_cast<long>(j) - half;
              if (src < 0 || src >= static_cast<long>(len)) continue;
              std::size_t s = static_cast<std::size_t>(src);
              if (in[0]) (*in[0])[s] += gv * fv.at(k, j);
              if (in[1]) in[1]->at(k, j) += gv * sv[s];
            }
          }
      });
}

}  // namespace ad
}  // namespace beamspeech
