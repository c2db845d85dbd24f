/* Copyright 2026 The segmini Authors. All Rights Reserved.

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

#ifndef SEGMINI_TENSOR_H_
#define SEGMINI_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "segmini/error.h"

namespace segmini {

// Dimensions of a rank-4 (batch, channels, rows, cols) array.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  // Throws kShape for non-positive dims and kSize when the element count
  // does not fit in std::ptrdiff_t.
  void Validate() const;
  std::size_t ElementCount() const;
  std::size_t PlaneSize() const {
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::string ToString() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

// Dense row-major (n, c, h, w) array. Operations never alias their inputs;
// every op returns a fresh tensor.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() : BasicTensor(Shape{}) {}
  explicit BasicTensor(const Shape& shape);

  static BasicTensor Zeros(const Shape& shape) { return BasicTensor(shape); }
  // Throws kShape if values.size() != shape.ElementCount().
  static BasicTensor FromValues(const Shape& shape, std::vector<T> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  std::size_t Index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) *
               shape_.w +
           w;
  }
  T& at(int n, int c, int h, int w) { return data_[Index(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const {
    return data_[Index(n, c, h, w)];
  }

  // Pointer to the contiguous h*w plane of (n, c).
  T* plane(int n, int c) { return data_.data() + Index(n, c, 0, 0); }
  const T* plane(int n, int c) const { return data_.data() + Index(n, c, 0, 0); }

  std::vector<T> Flatten() const { return data_; }
  bool AllFinite() const;

  template <typename U>
  BasicTensor<U> Cast() const {
    BasicTensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      out.data()[i] = static_cast<U>(data_[i]);
    }
    return out;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

// True iff shapes match and max |a - b| <= tol.
template <typename T>
bool ApproxEq(const BasicTensor<T>& a, const BasicTensor<T>& b, double tol);

template <typename T>
double MaxAbsDiff(const BasicTensor<T>& a, const BasicTensor<T>& b);

}  // namespace segmini

#endif  // SEGMINI_TENSOR_H_
