// src/tensorkit/nn.cc

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

#include "beamspeech/nn.h"

#include <random>

namespace beamspeech {

void ParameterStore::Add(const std::string &name, Tensor init) {
  if (!values_.emplace(name, std::move(init)).second)
    throw std::invalid_argument("ParameterStore: duplicate parameter '" + name + "'");
}

const Tensor &ParameterStore::Get(const std::string &name) const {
  auto it = values_.find(name);
  if (it == values_.end())
    throw std::out_of_range("ParameterStore: unknown parameter '" + name + "'");
  return it->second;
}

Tensor &ParameterStore::Mutable(const std::string &name) {
  auto it = values_.find(name);
  if (it == values_.end())
    throw std::out_of_range("ParameterStore: unknown parameter '" + name + "'");
  return it->second;
}

void ParameterStore::Set(const std::string &name, Tensor value) {
  Tensor &dst = Mutable(name);
  if (dst.shape() != value.shape())
    throw ShapeError("ParameterStore::Set", name + " has shape " + ShapeString(dst.shape()) +
                                                ", got " + ShapeString(value.shape()));
  dst = std::move(value);
}

std::size_t ParameterStore::NumScalars() const {
  std::size_t n = 0;
  for (const auto &kv : values_) n += kv.second.size();
  return n;
}

void ParameterStore::InitUniform(double range, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-range, range);
  for (auto &kv : values_)
    for (auto &v : kv.second.vec()) v = dist(rng);
}

Var ParamScope::operator()(const std::string &name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Var v = tape_.Parameter(store_.Get(name));
  bound_.emplace(name, v);
  return v;
}

GradMap ParamScope::Gradients() const {
  GradMap out;
  for (const auto &kv : bound_) out.emplace(kv.first, tape_.Grad(kv.second));
  return out;
}

void RegisterLinear(ParameterStore &store, const std::string &prefix, std::size_t in,
                    std::size_t out) {
  store.Add(prefix + "/W", Tensor({in, out}));
  store.Add(prefix + "/b", Tensor({out}));
}

Var Linear(ParamScope &ps, const std::string &prefix, Var x) {
  Var w = ps(prefix + "/W");
  Var b = ps(prefix + "/b");
  const Shape &s = x.shape();
  if (s.size() == 2) return ad::MatMul(x, w) + b;
  if (s.size() != 3)
    throw ShapeError("linear", prefix + ": input must be rank 2 or 3, got " + ShapeString(s));
  Var flat = ad::Reshape(x, {s[0] * s[1], s[2]});
  Var y = ad::MatMul(flat, w) + b;
  return ad::Reshape(y, {s[0], s[1], w.dim(1)});
}

void RegisterLstm(ParameterStore &store, const std::string &prefix, std::size_t in,
                  std::size_t cells) {
  store.Add(prefix + "/Wx", Tensor({in, 4 * cells}));
  store.Add(prefix + "/Wh", Tensor({cells, 4 * cells}));
  store.Add(prefix + "/b", Tensor({4 * cells}));
}

std::size_t LstmCells(const ParameterStore &store, const std::string &prefix) {
  return store.Get(prefix + "/Wh").dim(0);
}

namespace {

// Applies the gate nonlinearities to pre-activations z [B, 4H].
LstmState GateUpdate(Var z, std::size_t cells, const LstmState &prev) {
  Var i = ad::Sigmoid(ad::Slice(z, 1, 0, cells));
  Var f = ad::Sigmoid(ad::Slice(z, 1, cells, 2 * cells));
  Var g = ad::Tanh(ad::Slice(z, 1, 2 * cells, 3 * cells));
  Var o = ad::Sigmoid(ad::Slice(z, 1, 3 * cells, 4 * cells));
  Var c = prev.c.valid() ? f * prev.c + i * g : i * g;
  Var h = o * ad::Tanh(c);
  return {h, c};
}

}  // namespace

LstmState LstmStep(ParamScope &ps, const std::string &prefix, Var x, const LstmState &prev) {
  std::size_t cells = LstmCells(ps.store(), prefix);
  Var z = ad::MatMul(x, ps(prefix + "/Wx")) + ps(prefix + "/b");
  if (prev.h.valid()) z = z + ad::MatMul(prev.h, ps(prefix + "/Wh"));
  return GateUpdate(z, cells, prev);
}

Var LstmSequence(ParamScope &ps, const std::string &prefix, Var inputs, bool reverse) {
  const Shape &s = inputs.shape();
  if (s.size() != 3) throw ShapeError("lstm", prefix + ": expects [T,B,D], got " + ShapeString(s));
  std::size_t steps = s[0], batch = s[1], in = s[2];
  if (steps == 0) throw ShapeError("lstm", prefix + ": empty sequence");
  std::size_t cells = LstmCells(ps.store(), prefix);
  Var wx = ps(prefix + "/Wx");
  if (wx.dim(0) != in)
    throw ShapeError("lstm", prefix + ": input dim " + std::to_string(in) + " vs weights " +
                                 ShapeString(wx.shape()));
  Var wh = ps(prefix + "/Wh");
  // Input projections for all steps at once: [T, B*4H].
  Var xw = ad::MatMul(ad::Reshape(inputs, {steps * batch, in}), wx) + ps(prefix + "/b");
  xw = ad::Reshape(xw, {steps, batch * 4 * cells});

  std::vector<Var> outputs(steps);
  LstmState state;
  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t t = reverse ? steps - 1 - k : k;
    Var z = ad::Reshape(ad::Slice(xw, 0, t, t + 1), {batch, 4 * cells});
    if (state.h.valid()) z = z + ad::MatMul(state.h, wh);
    state = GateUpdate(z, cells, state);
    outputs[t] = ad::Reshape(state.h, {1, batch, cells});
  }
  return steps == 1 ? outputs[0] : ad::Concat(outputs, 0);
}

void RegisterBlstmLayer(ParameterStore &store, const std::string &prefix, std::size_t in,
                        std::size_t cells, std::size_t proj) {
  RegisterLstm(store, prefix + "/fw", in, cells);
  RegisterLstm(store, prefix + "/bw", in, cells);
  RegisterLinear(store, prefix + "/proj", 2 * cells, proj);
}

Var BlstmLayer(ParamScope &ps, const std::string &prefix, Var inputs) {
  Var fw = LstmSequence(ps, prefix + "/fw", inputs, false);
  Var bw = LstmSequence(ps, prefix + "/bw", inputs, true);
  return Linear(ps, prefix + "/proj", ad::Concat({fw, bw}, 2));
}

void RegisterBlstmStack(ParameterStore &store, const std::string &prefix, std::size_t in,
                        std::size_t cells, std::size_t proj, std::size_t layers) {
  for (std::size_t l = 0; l < layers; ++l)
    RegisterBlstmLayer(store, prefix + "/l" + std::to_string(l), l == 0 ? in : proj, cells, proj);
}

Var BlstmStack(ParamScope &ps, const std::string &prefix, std::size_t layers, Var inputs,
               const std::set<std::size_t> &subsample) {
  Var h = inputs;
  for (std::size_t l = 0; l < layers; ++l) {
    h = BlstmLayer(ps, prefix + "/l" + std::to_string(l), h);
    if (subsample.count(l)) {
      std::size_t steps = h.dim(0);
      std::vector<std::size_t> keep;
      for (std::size_t t = 1; t < steps; t += 2) keep.push_back(t);
      if (keep.empty())
        throw ShapeError("blstm_stack", prefix + ": sequence too short to subsample");
      h = ad::Take(h, keep);
    }
  }
  return h;
}

}  // namespace beamspeech
