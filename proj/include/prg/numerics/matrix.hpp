/* Copyright 2026 The prgkd Authors. All Rights Reserved.

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

#ifndef PRG_NUMERICS_MATRIX_HPP_
#define PRG_NUMERICS_MATRIX_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "prg/errors.hpp"

namespace prg {

template <typename Scalar>
using MatrixT =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVectorT = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Engine arithmetic is 64-bit; bundles store 32-bit and are upcast on load.
using Matrix = MatrixT<double>;
using MatrixF = MatrixT<float>;
using RowVector = RowVectorT<double>;
using Vector = VectorT<double>;
using IndexVector = std::vector<std::int64_t>;

inline std::string shape_str(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename Derived>
std::string shape_str(const Eigen::DenseBase<Derived>& m) {
  return shape_str(m.rows(), m.cols());
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

// Row-major product with a dimension check that reports both shapes.
template <typename A, typename B>
Matrix matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ (" + shape_str(a) +
                     " * " + shape_str(b) + ")");
  }
  return a * b;
}

// Gathers rows by index, in order.
template <typename Derived>
MatrixT<typename Derived::Scalar> gather_rows(
    const Eigen::MatrixBase<Derived>& m, const std::vector<std::int64_t>& idx) {
  MatrixT<typename Derived::Scalar> out(static_cast<Eigen::Index>(idx.size()),
                                        m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(idx[r]);
  }
  return out;
}

}  // namespace prg

#endif  // PRG_NUMERICS_MATRIX_HPP_
