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

#ifndef PRG_NUMERICS_OPS_HPP_
#define PRG_NUMERICS_OPS_HPP_

#include <cmath>

#include "prg/numerics/matrix.hpp"

namespace prg {

// Pearson pairs whose norm product falls at or below this are reported as
// uncorrelated (0), which covers constant vectors.
inline constexpr double kPccEpsilon = 1e-8;

template <typename Derived>
MatrixT<typename Derived::Scalar> softmax_rows(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  MatrixT<Scalar> out = x;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    if (out.cols() == 0) break;
    const Scalar mx = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - mx).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

template <typename Derived>
MatrixT<typename Derived::Scalar> log_softmax_rows(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  MatrixT<Scalar> out = x;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    if (out.cols() == 0) break;
    const Scalar mx = out.row(r).maxCoeff();
    const Scalar lse =
        mx + std::log((out.row(r).array() - mx).exp().sum());
    out.row(r).array() -= lse;
  }
  return out;
}

// Subtracts each row's mean.
template <typename Derived>
MatrixT<typename Derived::Scalar> center_rows(
    const Eigen::MatrixBase<Derived>& x) {
  MatrixT<typename Derived::Scalar> out = x;
  if (out.cols() > 0) {
    out.colwise() -= out.rowwise().mean();
  }
  return out;
}

// Per-row z-score with a 1e-12 floor on the variance.
template <typename Derived>
MatrixT<typename Derived::Scalar> standardize_rows(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  MatrixT<Scalar> out = center_rows(x);
  const Scalar n = static_cast<Scalar>(out.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    out.row(r) /= std::sqrt(out.row(r).squaredNorm() / n + Scalar(1e-12));
  }
  return out;
}

template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar pcc(const Eigen::MatrixBase<DerivedX>& x,
                              const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != y.size()) {
    throw ShapeError("pcc: length mismatch (" + std::to_string(x.size()) +
                     " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) {
    throw ShapeError("pcc: vectors need at least 2 entries");
  }
  const auto xc = (x.array() - x.mean()).eval();
  const auto yc = (y.array() - y.mean()).eval();
  const Scalar denom = std::sqrt((xc * xc).sum()) * std::sqrt((yc * yc).sum());
  if (!(denom > Scalar(kPccEpsilon))) return Scalar(0);
  return (xc * yc).sum() / denom;
}

// Intermediate state of a batched Pearson evaluation, kept so the reverse
// pass does not need to recompute it.
template <typename Scalar>
struct PccParts {
  MatrixT<Scalar> a_centered;
  MatrixT<Scalar> b_centered;
  VectorT<Scalar> a_norm;
  VectorT<Scalar> b_norm;
  MatrixT<Scalar> value;  // zero where the pair is degenerate
};

template <typename DA, typename DB>
PccParts<typename DA::Scalar> pcc_parts(const Eigen::MatrixBase<DA>& a,
                                        const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  if (a.cols() != b.cols()) {
    throw ShapeError("pcc_matrix: column mismatch (" + shape_str(a) + " vs " +
                     shape_str(b) + ")");
  }
  if (a.cols() < 2) {
    throw ShapeError("pcc_matrix: rows need at least 2 entries");
  }
  PccParts<Scalar> p;
  p.a_centered = center_rows(a);
  p.b_centered = center_rows(b);
  p.a_norm = p.a_centered.rowwise().norm();
  p.b_norm = p.b_centered.rowwise().norm();
  p.value = p.a_centered * p.b_centered.transpose();
  for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
      const Scalar denom = p.a_norm(i) * p.b_norm(j);
      p.value(i, j) =
          denom > Scalar(kPccEpsilon) ? p.value(i, j) / denom : Scalar(0);
    }
  }
  return p;
}

// Entry (i, j) is the Pearson correlation of row i of a with row j of b.
template <typename DA, typename DB>
MatrixT<typename DA::Scalar> pcc_matrix(const Eigen::MatrixBase<DA>& a,
                                        const Eigen::MatrixBase<DB>& b) {
  return pcc_parts(a, b).value;
}

// Reverse pass of pcc_matrix for upstream gradient g. Either output may be
// null when that side is constant.
template <typename Scalar>
void pcc_backward(const PccParts<Scalar>& p, const MatrixT<Scalar>& g,
                  MatrixT<Scalar>* grad_a, MatrixT<Scalar>* grad_b) {
  const Eigen::Index r = p.value.rows();
  const Eigen::Index s = p.value.cols();
  MatrixT<Scalar> scaled(r, s);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) {
      const Scalar denom = p.a_norm(i) * p.b_norm(j);
      scaled(i, j) = denom > Scalar(kPccEpsilon) ? g(i, j) / denom : Scalar(0);
    }
  }
  const MatrixT<Scalar> gr = (g.array() * p.value.array()).matrix();
  // Degenerate pairs carry value 0, so they drop out of the radial terms.
  if (grad_a != nullptr) {
    VectorT<Scalar> radial = gr.rowwise().sum();
    for (Eigen::Index i = 0; i < r; ++i) {
      const Scalar n2 = p.a_norm(i) * p.a_norm(i);
      radial(i) = n2 > Scalar(0) ? radial(i) / n2 : Scalar(0);
    }
    *grad_a = scaled * p.b_centered;
    *grad_a -= radial.asDiagonal() * p.a_centered;
  }
  if (grad_b != nullptr) {
    VectorT<Scalar> radial = gr.colwise().sum().transpose();
    for (Eigen::Index j = 0; j < s; ++j) {
      const Scalar n2 = p.b_norm(j) * p.b_norm(j);
      radial(j) = n2 > Scalar(0) ? radial(j) / n2 : Scalar(0);
    }
    *grad_b = scaled.transpose() * p.a_centered;
    *grad_b -= radial.asDiagonal() * p.b_centered;
  }
}

}  // namespace prg

#endif  // PRG_NUMERICS_OPS_HPP_
