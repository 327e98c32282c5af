// src/tensorkit/tensor.cc

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

#include "beamspeech/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace beamspeech {

std::string ShapeString(const Shape &shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::size_t NumElements(const Shape &shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

static void CheckShape(const Shape &shape, const char *op) {
  if (shape.empty()) throw ShapeError(op, "rank-0 shapes are not supported");
  for (auto d : shape)
    if (d == 0) throw ShapeError(op, "zero dimension in " + ShapeString(shape));
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  CheckShape(shape_, "Tensor");
  data_.assign(NumElements(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  CheckShape(shape_, "Tensor");
  if (NumElements(shape_) != data_.size())
    throw ShapeError("Tensor", "shape " + ShapeString(shape_) + " needs " +
                                   std::to_string(NumElements(shape_)) +
                                   " values, got " +
                                   std::to_string(data_.size()));
}

Tensor Tensor::Vector(std::initializer_list<double> v) {
  return Tensor({v.size()}, std::vector<double>(v));
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> v) {
  return Tensor({rows, cols}, std::vector<double>(v));
}

double Tensor::item() const {
  if (data_.size() != 1)
    throw ShapeError("item", "tensor " + ShapeString(shape_) + " is not scalar");
  return data_[0];
}

Tensor Tensor::Reshaped(Shape shape) const {
  if (NumElements(shape) != data_.size())
    throw ShapeError("reshape", ShapeString(shape_) + " -> " + ShapeString(shape));
  return Tensor(std::move(shape), data_);
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double MaxAbsDiff(const Tensor &a, const Tensor &b) {
  if (a.shape() != b.shape())
    throw ShapeError("MaxAbsDiff",
                     ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace beamspeech
