// Copyright 2026 The OmniTraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OMNITRAJ__NUMERICS__TENSOR_HPP_
#define OMNITRAJ__NUMERICS__TENSOR_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "omnitraj/util/error.hpp"

namespace omnitraj::numerics
{

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel(const Shape & shape)
{
  return std::accumulate(
    shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<std::int64_t>());
}

inline std::string shape_str(const Shape & shape)
{
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    os << (i ? ", " : "") << shape[i];
  }
  os << ']';
  return os.str();
}

/**
 * @brief Dense row-major array of 64-bit floats.
 *
 * Value type: copies are deep. A 32-bit view is available through to_f32()/from_f32() for
 * caches and checkpoints; all arithmetic runs in 64-bit.
 */
class Tensor
{
public:
  Tensor() : shape_{}, data_(1, 0.0) {}

  explicit Tensor(Shape shape, double fill = 0.0)
  : shape_(std::move(shape)), data_(static_cast<std::size_t>(numel(shape_)), fill)
  {
    for (auto d : shape_) {
      if (d < 0) {
        throw ShapeError("negative dimension in shape " + shape_str(shape_));
      }
    }
  }

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
  {
    if (static_cast<std::int64_t>(data_.size()) != numel(shape_)) {
      throw ShapeError(
        "data length " + std::to_string(data_.size()) + " does not match shape " +
        shape_str(shape_));
    }
  }

  static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

  static Tensor from_f32(Shape shape, const std::vector<float> & data)
  {
    return Tensor(std::move(shape), std::vector<double>(data.begin(), data.end()));
  }

  std::vector<float> to_f32() const { return std::vector<float>(data_.begin(), data_.end()); }

  const Shape & shape() const { return shape_; }
  std::int64_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  double * data() { return data_.data(); }
  const double * data() const { return data_.data(); }
  std::vector<double> & values() { return data_; }
  const std::vector<double> & values() const { return data_; }

  double & operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double item() const
  {
    if (data_.size() != 1) {
      throw ShapeError("item() on tensor of shape " + shape_str(shape_));
    }
    return data_[0];
  }

  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const
  {
    if (numel(shape) != size()) {
      throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  /// Rounds every element through float32.
  Tensor rounded_f32() const
  {
    Tensor out = *this;
    for (auto & v : out.data_) {
      v = static_cast<double>(static_cast<float>(v));
    }
    return out;
  }

  friend bool operator==(const Tensor & a, const Tensor & b)
  {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

private:
  Shape shape_;
  std::vector<double> data_;
};

namespace kernels
{

/**
 * C[m x n] (+)= op(A) * op(B), all row-major. op(A) is A or A^T (A stored k x m when
 * transposed), likewise for B. Each output element accumulates over k in ascending order,
 * independent of its row or column position.
 */
inline void gemm(
  bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k, const double * a,
  const double * b, double * c, bool accumulate)
{
  if (!accumulate) {
    std::fill(c, c + m * n, 0.0);
  }
  std::vector<double> bt;
  if (trans_b) {
    bt.resize(static_cast<std::size_t>(k * n));
    for (std::int64_t j = 0; j < n; ++j) {
      for (std::int64_t p = 0; p < k; ++p) {
        bt[p * n + j] = b[j * k + p];
      }
    }
    b = bt.data();
  }
  if (!trans_a) {
    for (std::int64_t i = 0; i < m; ++i) {
      double * crow = c + i * n;
      const double * arow = a + i * k;
      for (std::int64_t p = 0; p < k; ++p) {
        const double av = arow[p];
        const double * brow = b + p * n;
        for (std::int64_t j = 0; j < n; ++j) {
          crow[j] += av * brow[j];
        }
      }
    }
  } else {
    for (std::int64_t p = 0; p < k; ++p) {
      const double * arow = a + p * m;
      const double * brow = b + p * n;
      for (std::int64_t i = 0; i < m; ++i) {
        const double av = arow[i];
        double * crow = c + i * n;
        for (std::int64_t j = 0; j < n; ++j) {
          crow[j] += av * brow[j];
        }
      }
    }
  }
}

}  // namespace kernels

}  // namespace omnitraj::numerics

#endif  // OMNITRAJ__NUMERICS__TENSOR_HPP_
