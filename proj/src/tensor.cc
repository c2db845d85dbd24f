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

#include "segmini/tensor.h"

#include <cmath>
#include <limits>
#include <utility>

namespace segmini {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kSize:
      return "size";
    case ErrorKind::kShape:
      return "shape";
    case ErrorKind::kState:
      return "state";
    case ErrorKind::kConfig:
      return "config";
    case ErrorKind::kFormat:
      return "format";
    case ErrorKind::kData:
      return "data";
    case ErrorKind::kUsage:
      return "usage";
  }
  return "unknown";
}

void Shape::Validate() const {
  if (n < 1 || c < 1 || h < 1 || w < 1) {
    Fail(ErrorKind::kShape, "non-positive dimension in shape " + ToString());
  }
  constexpr auto kMax =
      static_cast<unsigned __int128>(std::numeric_limits<std::ptrdiff_t>::max());
  unsigned __int128 count = static_cast<unsigned __int128>(n) * c;
  count *= static_cast<unsigned __int128>(h);
  count *= static_cast<unsigned __int128>(w);
  if (count > kMax) {
    Fail(ErrorKind::kSize, "element count overflows for shape " + ToString());
  }
}

std::size_t Shape::ElementCount() const {
  return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
         static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
}

std::string Shape::ToString() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + ")";
}

template <typename T>
BasicTensor<T>::BasicTensor(const Shape& shape) : shape_(shape) {
  shape_.Validate();
  data_.assign(shape_.ElementCount(), T{0});
}

template <typename T>
BasicTensor<T> BasicTensor<T>::FromValues(const Shape& shape,
                                          std::vector<T> values) {
  shape.Validate();
  if (values.size() != shape.ElementCount()) {
    Fail(ErrorKind::kShape, "expected " + std::to_string(shape.ElementCount()) +
                                " values for shape " + shape.ToString() +
                                ", got " + std::to_string(values.size()));
  }
  BasicTensor out;
  out.shape_ = shape;
  out.data_ = std::move(values);
  return out;
}

template <typename T>
bool BasicTensor<T>::AllFinite() const {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
double MaxAbsDiff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(static_cast<double>(a.data()[i]) -
                              static_cast<double>(b.data()[i]));
    if (!(d <= worst)) worst = d;  // propagates NaN
  }
  return worst;
}

template <typename T>
bool ApproxEq(const BasicTensor<T>& a, const BasicTensor<T>& b, double tol) {
  if (a.shape() != b.shape()) return false;
  return MaxAbsDiff(a, b) <= tol;
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template double MaxAbsDiff(const Tensor&, const Tensor&);
template double MaxAbsDiff(const TensorD&, const TensorD&);
template bool ApproxEq(const Tensor&, const Tensor&, double);
template bool ApproxEq(const TensorD&, const TensorD&, double);

}  // namespace segmini
