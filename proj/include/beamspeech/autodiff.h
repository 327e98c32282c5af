// include/beamspeech/autodiff.h

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

//
// Reverse-mode automatic differentiation over dense double tensors.
//
// A Tape records every forward op as a node holding its value and a closure
// that maps the output gradient to input gradients. Node ids are assigned in
// creation order, so the id order is a topological order and Backward() walks
// it in reverse, visiting each node once.
//
// Lifecycle: one Tape per forward/backward pass. Leaves created with
// Parameter() receive gradients; Constant() leaves and anything computed only
// from constants are never differentiated. After Backward() the gradients stay
// readable through Grad() until the tape is destroyed or Clear()ed.

#ifndef BEAMSPEECH_AUTODIFF_H_
#define BEAMSPEECH_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <vector>

#include "beamspeech/tensor.h"

namespace beamspeech {

class Tape;

// Lightweight handle to a tape node.
class Var {
 public:
  Var() = default;
  Var(Tape *tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape *tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor &value() const;
  // By value: tape storage may move when new nodes are recorded.
  Shape shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }
  bool requires_grad() const;

 private:
  Tape *tape_ = nullptr;
  std::size_t id_ = 0;
};

// Receives the output gradient and accumulates into the input gradients.
// in_grads[i] is null when input i does not need a gradient.
using BackwardFn =
    std::function<void(const Tensor &out_grad, std::vector<Tensor *> &in_grads)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var Constant(Tensor value);
  Var Parameter(Tensor value);

  // Records an op output. `backward` may be empty when no input needs grad.
  Var Record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  // Runs reverse accumulation from a scalar root (seed gradient 1).
  void Backward(Var root);

  const Tensor &Value(std::size_t id) const { return nodes_[id].value; }
  bool RequiresGrad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient of the last Backward() root with respect to `v`. Zero-filled if v
  // was not reached.
  Tensor Grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  void Clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

namespace ad {

// Elementwise binary ops with numpy-style broadcasting.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Div(Var a, Var b);

Var Neg(Var a);
Var Scale(Var a, double s);
Var AddScalar(Var a, double s);

Var Exp(Var a);
Var Log(Var a);
Var Tanh(Var a);
Var Sigmoid(Var a);
Var Square(Var a);
// max(a, floor); the gradient is zero where a < floor.
Var ClampMin(Var a, double floor);

// 2-D product [M,K]x[K,N].
Var MatMul(Var a, Var b);
// Batched product over the leading axis: a is [B,M,K] (or [B,K,M] when
// trans_a), b is [B,K,N] ([B,N,K] when trans_b) or a shared 2-D matrix.
Var BatchMatMul(Var a, Var b, bool trans_a = false, bool trans_b = false);

Var Reshape(Var a, Shape shape);
Var Transpose(Var a);  // 2-D
// General axis permutation: out.dim(i) = in.dim(perm[i]).
Var Permute(Var a, std::vector<std::size_t> perm);
Var Concat(const std::vector<Var> &parts, std::size_t axis);
Var Slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
// Gathers entries along axis 0: out[i] = a[indices[i]].
Var Take(Var a, const std::vector<std::size_t> &indices);
// out[i] = a[i, index[i]] for a 2-D input.
Var PickPerRow(Var a, const std::vector<std::size_t> &index);
// [B,C,C] -> [B,C].
Var Diagonal(Var a);

Var Sum(Var a);   // -> [1]
Var Mean(Var a);  // -> [1]
// Reduces one axis; the axis is kept with extent 1 when keep_dim.
Var SumAxis(Var a, std::size_t axis, bool keep_dim = false);
Var MeanAxis(Var a, std::size_t axis, bool keep_dim = false);

// softmax(temperature * a) over the last axis.
Var Softmax(Var a, double temperature = 1.0);
Var LogSoftmax(Var a);

// Centered 1-D correlation of a length-L signal with K filters of odd width W,
// zero padded: out[l,k] = sum_j filters[k,j] * signal[l + j - W/2].
Var Conv1d(Var signal, Var filters);

}  // namespace ad

inline Var operator+(Var a, Var b) { return ad::Add(a, b); }
inline Var operator-(Var a, Var b) { return ad::Sub(a, b); }
inline Var operator*(Var a, Var b) { return ad::Mul(a, b); }
inline Var operator/(Var a, Var b) { return ad::Div(a, b); }
inline Var operator-(Var a) { return ad::Neg(a); }
inline Var operator*(double s, Var a) { return ad::Scale(a, s); }
inline Var operator*(Var a, double s) { return ad::Scale(a, s); }

}  // namespace beamspeech

#endif  // BEAMSPEECH_AUTODIFF_H_
