// include/beamspeech/tensor.h

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

#ifndef BEAMSPEECH_TENSOR_H_
#define BEAMSPEECH_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace beamspeech {

using Shape = std::vector<std::size_t>;

std::string ShapeString(const Shape &shape);
std::size_t NumElements(const Shape &shape);

// Raised when operand shapes do not conform. The message names the op and the
// offending dimensions.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string &op, const std::string &detail)
      : std::invalid_argument(op + ": " + detail), op_(op) {}
  const std::string &op() const { return op_; }

 private:
  std::string op_;
};

// Raised for numerically invalid situations (singular matrices, vanishing
// traces, inadmissible alignments). `index` carries a diagnostic position such
// as a frequency bin, or -1 when not applicable.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string &what, long index = -1)
      : std::runtime_error(what), index_(index) {}
  long index() const { return index_; }

 private:
  long index_;
};

// Dense row-major tensor of doubles. Value type; copying copies the data.
class Tensor {
 public:
  Tensor() : shape_{1}, data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double v) { return Tensor({1}, {v}); }
  static Tensor Vector(std::initializer_list<double> v);
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> v);

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  std::vector<double> &vec() { return data_; }
  const std::vector<double> &vec() const { return data_; }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D and 3-D accessors; no bounds checking beyond the debug asserts.
  double &at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  double &at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  double item() const;
  Tensor Reshaped(Shape shape) const;
  void Fill(double v);
  bool AllFinite() const;

  friend bool operator==(const Tensor &a, const Tensor &b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

double MaxAbsDiff(const Tensor &a, const Tensor &b);

}  // namespace beamspeech

#endif  // BEAMSPEECH_TENSOR_H_
