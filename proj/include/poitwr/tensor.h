/* Copyright 2026 The POITWR Authors. All Rights Reserved.

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

#ifndef POITWR_TENSOR_H_
#define POITWR_TENSOR_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace poi {

// Dense row-major array. A default-constructed tensor has rank 0 and no
// values and stands for an absent parameter.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<uint32_t> shape)
      : shape_(std::move(shape)), values_(element_count(shape_), T(0)) {}

  Tensor(std::vector<uint32_t> shape, std::vector<T> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != element_count(shape_)) {
      throw std::invalid_argument("tensor value count does not match shape");
    }
  }

  const std::vector<uint32_t>& shape() const { return shape_; }
  uint32_t rank() const { return static_cast<uint32_t>(shape_.size()); }
  uint32_t dim(size_t axis) const { return shape_.at(axis); }
  size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

  T& operator[](size_t i) { return values_[i]; }
  const T& operator[](size_t i) const { return values_[i]; }

  // Row view of a rank-2 tensor.
  std::span<T> row(size_t r) {
    const size_t cols = shape_[1];
    return std::span<T>(values_.data() + r * cols, cols);
  }
  std::span<const T> row(size_t r) const {
    const size_t cols = shape_[1];
    return std::span<const T>(values_.data() + r * cols, cols);
  }

  void fill(T value) { std::fill(values_.begin(), values_.end(), value); }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(values_.begin(), values_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  // Exact bit pattern equality (distinguishes -0 from +0).
  bool bit_equal(const Tensor& other) const {
    return shape_ == other.shape_ &&
           (values_.empty() ||
            std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(T)) == 0);
  }

  static size_t element_count(const std::vector<uint32_t>& shape) {
    if (shape.empty()) return 0;
    size_t n = 1;
    for (uint32_t d : shape) {
      if (d == 0) throw std::invalid_argument("tensor dimensions must be positive");
      n *= d;
    }
    return n;
  }

 private:
  std::vector<uint32_t> shape_;
  std::vector<T> values_;
};

}  // namespace poi

#endif  // POITWR_TENSOR_H_
