// include/beamspeech/nn.h

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
// Named parameters and the recurrent / affine layers built on the tape.

#ifndef BEAMSPEECH_NN_H_
#define BEAMSPEECH_NN_H_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "beamspeech/autodiff.h"

namespace beamspeech {

using GradMap = std::map<std::string, Tensor>;

// Name -> tensor map. Names are unique and shapes are fixed at creation.
// Iteration is in lexicographic name order, which fixes the order of random
// initialization, gradient reduction and checkpoint records.
class ParameterStore {
 public:
  void Add(const std::string &name, Tensor init);
  bool Has(const std::string &name) const { return values_.count(name) > 0; }
  const Tensor &Get(const std::string &name) const;
  Tensor &Mutable(const std::string &name);
  void Set(const std::string &name, Tensor value);
  const std::map<std::string, Tensor> &all() const { return values_; }
  std::size_t NumScalars() const;

  // Uniform(-range, range) for every parameter, drawn in name order.
  void InitUniform(double range, std::uint64_t seed);

 private:
  std::map<std::string, Tensor> values_;
};

// Binds store parameters onto one tape as gradient leaves, once per name.
class ParamScope {
 public:
  ParamScope(Tape &tape, const ParameterStore &store) : tape_(tape), store_(store) {}

  Var operator()(const std::string &name);
  Tape &tape() { return tape_; }
  const ParameterStore &store() const { return store_; }

  // Gradients of every bound parameter after tape.Backward().
  GradMap Gradients() const;

 private:
  Tape &tape_;
  const ParameterStore &store_;
  std::map<std::string, Var> bound_;
};

// Affine map: prefix/W [in, out], prefix/b [out].
void RegisterLinear(ParameterStore &store, const std::string &prefix, std::size_t in,
                    std::size_t out);
// x is [N, in] or [T, B, in]; the result keeps the leading axes.
Var Linear(ParamScope &ps, const std::string &prefix, Var x);

struct LstmState {
  Var h;  // [B, H]
  Var c;  // [B, H]
};

// Unidirectional LSTM: prefix/Wx [in, 4H], prefix/Wh [H, 4H], prefix/b [4H],
// gate blocks ordered input, forget, cell, output.
void RegisterLstm(ParameterStore &store, const std::string &prefix, std::size_t in,
                  std::size_t cells);
std::size_t LstmCells(const ParameterStore &store, const std::string &prefix);
// One step for a [B, in] input. An invalid prev.h means a zero initial state.
LstmState LstmStep(ParamScope &ps, const std::string &prefix, Var x, const LstmState &prev);
// Runs over a [T, B, in] sequence, returning hidden states [T, B, H] in input
// time order (also when reverse is set).
Var LstmSequence(ParamScope &ps, const std::string &prefix, Var inputs, bool reverse);

// Bidirectional layer: prefix/fw, prefix/bw and a projection prefix/proj of the
// concatenated states to `proj` units.
void RegisterBlstmLayer(ParameterStore &store, const std::string &prefix, std::size_t in,
                        std::size_t cells, std::size_t proj);
Var BlstmLayer(ParamScope &ps, const std::string &prefix, Var inputs);

// Layers prefix/l0 ... prefix/l{n-1}. Layers whose index is in `subsample`
// keep every second output frame (frames 1, 3, 5, ...), so T frames become
// floor(T/2).
void RegisterBlstmStack(ParameterStore &store, const std::string &prefix, std::size_t in,
                        std::size_t cells, std::size_t proj, std::size_t layers);
Var BlstmStack(ParamScope &ps, const std::string &prefix, std::size_t layers, Var inputs,
               const std::set<std::size_t> &subsample = {});

}  // namespace beamspeech

#endif  // BEAMSPEECH_NN_H_
