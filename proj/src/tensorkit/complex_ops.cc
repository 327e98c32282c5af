// src/tensorkit/complex_ops.cc

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

#include "beamspeech/complex_ops.h"

#include <Eigen/Dense>
#include <cmath>
#include <memory>

namespace beamspeech {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ComplexTensor::ComplexTensor(Tensor r, Tensor i) : re(std::move(r)), im(std::move(i)) {
  if (re.shape() != im.shape())
    throw ShapeError("ComplexTensor",
                     "re " + ShapeString(re.shape()) + " vs im " + ShapeString(im.shape()));
}

CVar ConstantC(Tape &tape, const ComplexTensor &x) {
  return {tape.Constant(x.re), tape.Constant(x.im)};
}

CVar ParameterC(Tape &tape, const ComplexTensor &x) {
  return {tape.Parameter(x.re), tape.Parameter(x.im)};
}

namespace ad {

CVar CAdd(const CVar &a, const CVar &b) { return {a.re + b.re, a.im + b.im}; }
CVar CSub(const CVar &a, const CVar &b) { return {a.re - b.re, a.im - b.im}; }

CVar CMul(const CVar &a, const CVar &b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

CVar CDiv(const CVar &a, const CVar &b) {
  Var den = Square(b.re) + Square(b.im);
  return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
}

CVar CConj(const CVar &a) { return {a.re, Neg(a.im)}; }

CVar CScaleBy(const CVar &a, Var s) { return {a.re * s, a.im * s}; }

CVar CMatMul(const CVar &a, const CVar &b) {
  const Shape &sa = a.shape();
  const Shape &sb = b.shape();
  if (sa != sb || sa.size() < 2 || sa[sa.size() - 1] != sa[sa.size() - 2])
    throw ShapeError("complex_matmul",
                     ShapeString(sa) + " x " + ShapeString(sb) + " (need equal square)");
  if (sa.size() == 2)
    return {MatMul(a.re, b.re) - MatMul(a.im, b.im), MatMul(a.re, b.im) + MatMul(a.im, b.re)};
  if (sa.size() != 3) throw ShapeError("complex_matmul", "rank must be 2 or 3");
  return {BatchMatMul(a.re, b.re) - BatchMatMul(a.im, b.im),
          BatchMatMul(a.re, b.im) + BatchMatMul(a.im, b.re)};
}

namespace {

// Inverts every [C,C] slice of the embedding; returns the inverse embeddings
// (each 2C x 2C, row-major) for reuse in the backward pass.
std::shared_ptr<std::vector<RowMat>> InvertEmbeddings(const Tensor &re, const Tensor &im,
                                                      std::size_t batch, std::size_t c,
                                                      double load, Tensor &out_re,
                                                      Tensor &out_im) {
  auto inverses = std::make_shared<std::vector<RowMat>>();
  inverses->reserve(batch);
  const std::size_t n = 2 * c;
  for (std::size_t b = 0; b < batch; ++b) {
    RowMat m(n, n);
    const double *ar = re.data() + b * c * c;
    const double *ai = im.data() + b * c * c;
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        double r = ar[i * c + j] + (i == j ? load : 0.0);
        double q = ai[i * c + j];
        m(i, j) = r;
        m(i + c, j + c) = r;
        m(i, j + c) = -q;
        m(i + c, j) = q;
      }
    Eigen::PartialPivLU<RowMat> lu(m);
    // Partial pivoting leaves U's diagonal as the pivots; a vanishing pivot
    // relative to the matrix scale means the loaded matrix is singular.
    double scale = m.cwiseAbs().maxCoeff();
    double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(scale > 0.0) || !(min_pivot > 1e-14 * scale))
      throw NumericError("complex_inverse: singular matrix at batch index " + std::to_string(b),
                         static_cast<long>(b));
    RowMat inv = lu.inverse();
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        out_re[b * c * c + i * c + j] = inv(i, j);
        out_im[b * c * c + i * c + j] = inv(i + c, j);
      }
    inverses->push_back(std::move(inv));
  }
  return inverses;
}

}  // namespace

CVar CInverse(const CVar &a, double load) {
  const Shape &s = a.shape();
  if (s.size() < 2 || s.size() > 3 || s[s.size() - 1] != s[s.size() - 2] ||
      a.im.shape() != s)
    throw ShapeError("complex_inverse", "expects [C,C] or [B,C,C], got " + ShapeString(s));
  if (load < 0.0) throw std::invalid_argument("complex_inverse: negative diagonal load");
  Tape &tape = *a.re.tape();
  std::size_t c = s.back();
  std::size_t batch = s.size() == 3 ? s[0] : 1;
  Tensor out_re(s), out_im(s);
  auto inverses = InvertEmbeddings(a.re.value(), a.im.value(), batch, c, load, out_re, out_im);

  // Both outputs are views of one inverse embedding, so a single node carries
  // the packed [2, ...] result and two slices expose re and im.
  Shape packed_shape = {2};
  packed_shape.insert(packed_shape.end(), s.begin(), s.end());
  Tensor packed(packed_shape);
  std::copy(out_re.vec().begin(), out_re.vec().end(), packed.vec().begin());
  std::copy(out_im.vec().begin(), out_im.vec().end(), packed.vec().begin() + out_re.size());

  Var node = tape.Record(
      std::move(packed), {a.re, a.im},
      [inverses, batch, c](const Tensor &g, std::vector<Tensor *> &in) {
        const std::size_t n = 2 * c;
        const std::size_t half = batch * c * c;
        for (std::size_t b = 0; b < batch; ++b) {
          // dL/dInv restricted to the entries that define the outputs.
          RowMat g_inv = RowMat::Zero(n, n);
          for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < c; ++j) {
              g_inv(i, j) = g[b * c * c + i * c + j];
              g_inv(i + c, j) = g[half + b * c * c + i * c + j];
            }
          const RowMat &inv = (*inverses)[b];
          // d(M^-1) = -M^-1 dM M^-1  =>  dL/dM = -M^-T (dL/dM^-1) M^-T.
          RowMat g_m = -inv.transpose() * g_inv * inv.transpose();
          for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < c; ++j) {
              if (in[0]) (*in[0])[b * c * c + i * c + j] += g_m(i, j) + g_m(i + c, j + c);
              if (in[1]) (*in[1])[b * c * c + i * c + j] += g_m(i + c, j) - g_m(i, j + c);
            }
        }
      });
  Var re = Reshape(Slice(node, 0, 0, 1), s);
  Var im = Reshape(Slice(node, 0, 1, 2), s);
  return {re, im};
}

}  // namespace ad
}  // namespace beamspeech
