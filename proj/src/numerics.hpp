/* Copyright 2026 The memecap Authors. All Rights Reserved.

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

// Dense row-major linear algebra and the elementwise nonlinearities used by
// the LSTM. Everything is templated on the scalar type; float is the training
// default and double is used for gradient checking.

#ifndef MEMECAP_NUMERICS_HPP_
#define MEMECAP_NUMERICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace memecap {

enum class Precision { kFloat32 = 32, kFloat64 = 64 };

template <typename T>
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, T fill = T(0)) : data_(n, fill) {}
  Vector(std::initializer_list<T> values) : data_(values) {}
  explicit Vector(std::vector<T> values) : data_(std::move(values)) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  const std::vector<T>& values() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<T> data_;
};

template <typename T>
class Matrix {
 public:
  // Default-constructed matrices are empty (0x0) and mark absent tensors.
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      fail(ErrorCode::kShape, "matrix data length " +
                                  std::to_string(data_.size()) +
                                  " does not match " + shape_string());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  std::string shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b,
                                const char* op) {
  if (a != b) {
    fail(ErrorCode::kShape, std::string(op) + ": length mismatch (" +
                                std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
  }
}

}  // namespace detail

template <typename T>
bool all_finite(std::span<const T> values) {
  return std::all_of(values.begin(), values.end(),
                     [](T x) { return std::isfinite(x); });
}

template <typename T>
void fill_uniform(std::span<T> values, Rng& rng, double range) {
  for (T& x : values) x = static_cast<T>(rng.uniform(-range, range));
}

// result = m v
template <typename T>
Vector<T> matvec(const Matrix<T>& m, const Vector<T>& v) {
  if (m.cols() != v.size()) {
    fail(ErrorCode::kShape, "matvec: matrix " + m.shape_string() +
                                " cannot multiply vector of length " +
                                std::to_string(v.size()));
  }
  Vector<T> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    T acc = T(0);
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

// out += m^T v
template <typename T>
void add_matvec_transposed(const Matrix<T>& m, const Vector<T>& v,
                           Vector<T>& out) {
  if (m.rows() != v.size() || m.cols() != out.size()) {
    fail(ErrorCode::kShape, "matvec_transposed: matrix " + m.shape_string() +
                                " with vector " + std::to_string(v.size()) +
                                " into " + std::to_string(out.size()));
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const T scale = v[r];
    if (scale == T(0)) continue;
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += scale * row[c];
  }
}

template <typename T>
Vector<T> matvec_transposed(const Matrix<T>& m, const Vector<T>& v) {
  Vector<T> out(m.cols());
  add_matvec_transposed(m, v, out);
  return out;
}

// m += a b^T
template <typename T>
void add_outer(Matrix<T>& m, const Vector<T>& a, const Vector<T>& b) {
  if (m.rows() != a.size() || m.cols() != b.size()) {
    fail(ErrorCode::kShape, "outer: matrix " + m.shape_string() +
                                " with vectors " + std::to_string(a.size()) +
                                " and " + std::to_string(b.size()));
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const T scale = a[r];
    if (scale == T(0)) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += scale * b[c];
  }
}

template <typename T>
T dot(const Vector<T>& a, const Vector<T>& b) {
  detail::require_same_length(a.size(), b.size(), "dot");
  T acc = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
Vector<T> add(const Vector<T>& a, const Vector<T>& b) {
  detail::require_same_length(a.size(), b.size(), "add");
  Vector<T> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

// y += alpha x
template <typename T>
void axpy(T alpha, std::type_identity_t<std::span<const T>> x,
          std::type_identity_t<std::span<T>> y) {
  detail::require_same_length(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

template <typename T>
Vector<T> hadamard(const Vector<T>& a, const Vector<T>& b) {
  detail::require_same_length(a.size(), b.size(), "hadamard");
  Vector<T> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

template <typename T>
Vector<T> concat(const Vector<T>& a, const Vector<T>& b) {
  std::vector<T> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return Vector<T>(std::move(out));
}

// Elements [offset, offset + n) of v.
template <typename T>
Vector<T> slice(const Vector<T>& v, std::size_t offset, std::size_t n) {
  if (offset + n > v.size()) {
    fail(ErrorCode::kShape, "slice: [" + std::to_string(offset) + ", " +
                                std::to_string(offset + n) +
                                ") exceeds length " + std::to_string(v.size()));
  }
  return Vector<T>(std::vector<T>(v.begin() + offset, v.begin() + offset + n));
}

template <typename T>
T sigmoid(T x) {
  // Branching keeps exp() from overflowing for large |x|.
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
Vector<T> sigmoid(const Vector<T>& v) {
  Vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  return out;
}

template <typename T>
Vector<T> tanh(const Vector<T>& v) {
  Vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

template <typename T>
Vector<T> log_softmax(const Vector<T>& v) {
  if (v.empty()) fail(ErrorCode::kShape, "softmax of an empty vector");
  const T max = *std::max_element(v.begin(), v.end());
  T sum = T(0);
  for (T x : v) sum += std::exp(x - max);
  const T log_norm = max + std::log(sum);
  Vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - log_norm;
  return out;
}

template <typename T>
Vector<T> softmax(const Vector<T>& v) {
  if (v.empty()) fail(ErrorCode::kShape, "softmax of an empty vector");
  const T max = *std::max_element(v.begin(), v.end());
  Vector<T> out(v.size());
  T sum = T(0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - max);
    sum += out[i];
  }
  for (T& x : out) x /= sum;
  return out;
}

template <typename T>
T squared_norm(std::span<const T> values) {
  T acc = T(0);
  for (T x : values) acc += x * x;
  return acc;
}

}  // namespace memecap

#endif  // MEMECAP_NUMERICS_HPP_
