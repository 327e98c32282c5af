// include/beamspeech/complex_ops.h

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
// Complex tensors as (re, im) pairs of real tensors. Every gradient is taken
// with respect to the real embedding, so a finite-difference check perturbs
// re and im entries independently.

#ifndef BEAMSPEECH_COMPLEX_OPS_H_
#define BEAMSPEECH_COMPLEX_OPS_H_

#include "beamspeech/autodiff.h"

namespace beamspeech {

struct ComplexTensor {
  Tensor re;
  Tensor im;

  ComplexTensor() = default;
  ComplexTensor(Tensor r, Tensor i);
  explicit ComplexTensor(const Shape &shape)
      : re(shape, 0.0), im(shape, 0.0) {}
  const Shape &shape() const { return re.shape(); }
};

struct CVar {
  Var re;
  Var im;
  Shape shape() const { return re.shape(); }
  ComplexTensor value() const { return {re.value(), im.value()}; }
};

CVar ConstantC(Tape &tape, const ComplexTensor &x);
CVar ParameterC(Tape &tape, const ComplexTensor &x);

namespace ad {

CVar CAdd(const CVar &a, const CVar &b);
CVar CSub(const CVar &a, const CVar &b);
// Elementwise complex product with broadcasting.
CVar CMul(const CVar &a, const CVar &b);
// Elementwise complex quotient with broadcasting.
CVar CDiv(const CVar &a, const CVar &b);
CVar CConj(const CVar &a);
// Scales both parts by a real tensor (broadcast).
CVar CScaleBy(const CVar &a, Var s);

// [C,C]x[C,C] or batched [B,C,C]x[B,C,C] complex matrix product.
CVar CMatMul(const CVar &a, const CVar &b);

// Inverse of (a + load*I) for a [C,C] or batched [B,C,C] input, computed by
// Gaussian elimination with partial pivoting on the 2C x 2C real embedding
// [[re, -im], [im, re]]. Throws NumericError carrying the batch index when a
// loaded matrix is singular.
CVar CInverse(const CVar &a, double load = 0.0);

}  // namespace ad
}  // namespace beamspeech

#endif  // BEAMSPEECH_COMPLEX_OPS_H_
