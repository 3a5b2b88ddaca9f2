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

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "prg/errors.hpp"
#include "prg/numerics/gradcheck.hpp"
#include "prg/numerics/matrix.hpp"
#include "prg/numerics/ops.hpp"
#include "prg/numerics/tape.hpp"
#include "test_util.hpp"

namespace prg {
namespace {

using testing::random_matrix;

double scalar_pcc(const RowVector& x, const RowVector& y) {
  const double mx = x.mean();
  const double my = y.mean();
  double sxy = 0, sxx = 0, syy = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sxy += (x(i) - mx) * (y(i) - my);
    sxx += (x(i) - mx) * (x(i) - mx);
    syy += (y(i) - my) * (y(i) - my);
  }
  const double d = std::sqrt(sxx) * std::sqrt(syy);
  return d > kPccEpsilon ? sxy / d : 0.0;
}

TEST(Matmul, IdentityZeroAndHandCase) {
  std::mt19937_64 rng(1);
  const Matrix a = random_matrix(rng, 2, 3);
  EXPECT_EQ(matmul(Matrix::Identity(2, 2), a), a);
  EXPECT_TRUE(matmul(Matrix::Zero(4, 2), a).isZero(0.0));

  Matrix l(2, 2);
  l << 1, 2, 3, 4;
  Matrix r(2, 1);
  r << 0, 1;
  Matrix expected(2, 1);
  expected << 2, 4;
  EXPECT_EQ(matmul(l, r), expected);
}

TEST(Matmul, InnerMismatchNamesBothShapes) {
  try {
    matmul(Matrix::Zero(2, 3), Matrix::Zero(2, 3));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("2x3 * 2x3"), std::string::npos);
  }
}

TEST(Softmax, HandCases) {
  Matrix x(3, 3);
  x << 0, 0, 0, 1000, 0, 0, std::log(2.0), 0, 0;
  Matrix two(1, 2);
  two << std::log(2.0), 0;
  Matrix big(1, 2);
  big << 1000, 0;

  const Matrix s0 = softmax_rows(Matrix::Zero(1, 3));
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(s0(0, j), 1.0 / 3.0, 1e-15);

  const Matrix sb = softmax_rows(big);
  EXPECT_TRUE(all_finite(sb));
  EXPECT_EQ(sb(0, 0), 1.0);
  // Vectorized exp may return a subnormal instead of flushing to zero.
  EXPECT_GE(sb(0, 1), 0.0);
  EXPECT_LT(sb(0, 1), 1e-300);

  const Matrix st = softmax_rows(two);
  EXPECT_NEAR(st(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(st(0, 1), 1.0 / 3.0, 1e-15);
}

TEST(Softmax, RowsArePositiveProbabilityVectors) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix s = softmax_rows(random_matrix(rng, 5, 7, 10.0));
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      EXPECT_NEAR(s.row(r).sum(), 1.0, 1e-12);
      EXPECT_GT(s.row(r).minCoeff(), 0.0);
    }
  }
}

TEST(Pcc, HandCases) {
  RowVector a(3), b(3), c(3);
  a << 1, 2, 3;
  b << 3, 2, 1;
  c << 5, 5, 5;
  EXPECT_NEAR(pcc(a, a), 1.0, 1e-15);
  EXPECT_NEAR(pcc(a, b), -1.0, 1e-15);
  EXPECT_EQ(pcc(c, a), 0.0);
  EXPECT_EQ(pcc(a, c), 0.0);
}

TEST(Pcc, RejectsShortOrMismatchedVectors) {
  RowVector one(1), two(2), three(3);
  one << 1;
  two << 1, 2;
  three << 1, 2, 3;
  EXPECT_THROW(pcc(one, one), ShapeError);
  EXPECT_THROW(pcc(two, three), ShapeError);
}

TEST(Pcc, RandomizedProperties) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mag(0.1, 10.0);
  std::uniform_real_distribution<double> shift(-100.0, 100.0);
  std::uniform_int_distribution<int> len(2, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    const RowVector x = random_matrix(rng, 1, n);
    const RowVector y = random_matrix(rng, 1, n);
    const double r = pcc(x, y);
    EXPECT_NEAR(r, pcc(y, x), 1e-10);
    EXPECT_LE(std::abs(r), 1.0 + 1e-12);
    const double a = mag(rng);
    const double s = shift(rng);
    const RowVector pos = (a * x.array() + s).matrix();
    const RowVector neg = (-a * x.array() + s).matrix();
    EXPECT_NEAR(pcc(pos, y), r, 1e-10);
    EXPECT_NEAR(pcc(neg, y), -r, 1e-10);
    EXPECT_EQ(pcc(RowVector::Constant(n, s), y), 0.0);
  }
}

TEST(PccMatrix, MatchesScalarOracle) {
  std::mt19937_64 rng(4);
  const Matrix a = random_matrix(rng, 3, 4);
  const Matrix b = random_matrix(rng, 2, 4);
  const Matrix m = pcc_matrix(a, b);
  ASSERT_EQ(m.rows(), 3);
  ASSERT_EQ(m.cols(), 2);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      EXPECT_NEAR(m(i, j), scalar_pcc(a.row(i), b.row(j)), 1e-14);
    }
  }
  const Matrix self = pcc_matrix(a, a);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(self(i, i), 1.0, 1e-14);

  Matrix u(1, 3), v(1, 3);
  u << 1, 2, 3;
  v << 2, 4, 6;
  EXPECT_NEAR(pcc_matrix(u, v)(0, 0), 1.0, 1e-15);
  EXPECT_THROW(pcc_matrix(Matrix::Zero(2, 3), Matrix::Zero(2, 4)), ShapeError);
}

TEST(Tape, BackwardRunsOnce) {
  Tape tape;
  Var x = tape.leaf(Matrix::Ones(2, 2));
  Var loss = ad::sum(ad::square(x));
  tape.backward(loss);
  EXPECT_TRUE(tape.consumed());
  EXPECT_TRUE(x.grad().isApprox(2.0 * Matrix::Ones(2, 2)));
  EXPECT_THROW(tape.backward(loss), StateError);
}

TEST(Tape, BackwardNeedsScalarLoss) {
  Tape tape;
  Var x = tape.leaf(Matrix::Ones(2, 2));
  EXPECT_THROW(tape.backward(x), ShapeError);
}

TEST(Tape, ReusedLeafAccumulates) {
  Tape tape;
  Matrix v(1, 2);
  v << 3, -1;
  Var x = tape.leaf(v);
  Var loss = ad::sum(ad::hadamard(x, x) + x);
  tape.backward(loss);
  Matrix expected(1, 2);
  expected << 7, -1;
  EXPECT_TRUE(x.grad().isApprox(expected, 1e-15));
}

TEST(Gradcheck, SumOfSquaresIsExact) {
  std::mt19937_64 rng(5);
  const ScalarFn f = [](Tape&, Var x) { return ad::sum(ad::square(x)); };
  EXPECT_LT(finite_diff_gradcheck(f, random_matrix(rng, 3, 4)), 1e-9);
}

TEST(Gradcheck, DetectsNegatedGradient) {
  std::mt19937_64 rng(6);
  const ScalarFn f = [](Tape&, Var x) {
    return ad::sum(ad::square(ad::negate_gradient(x)));
  };
  EXPECT_GT(finite_diff_gradcheck(f, random_matrix(rng, 2, 2)), 0.1);
}

TEST(Gradcheck, NonFiniteValueThrows) {
  const ScalarFn f = [](Tape& t, Var x) {
    return ad::sum(ad::hadamard(
        x, t.constant(Matrix::Constant(
               1, 1, std::numeric_limits<double>::infinity()))));
  };
  EXPECT_THROW(finite_diff_gradcheck(f, Matrix::Ones(1, 1)), NumericError);
}

// Every differentiable op at 10 random points.
class OpGradcheck : public ::testing::TestWithParam<int> {};

TEST_P(OpGradcheck, AllOpsBelowTolerance) {
  std::mt19937_64 rng(100 + GetParam());
  const Matrix w = random_matrix(rng, 4, 3);
  const Matrix other = random_matrix(rng, 3, 4);
  const Matrix bias = random_matrix(rng, 1, 4);
  const Matrix x0 = random_matrix(rng, 3, 4);

  const std::vector<std::pair<const char*, ScalarFn>> fns = {
      {"add_sub_scale",
       [&](Tape& t, Var x) {
         return ad::sum(ad::square(2.5 * x - t.constant(other) + x));
       }},
      {"add_row",
       [&](Tape& t, Var x) {
         return ad::sum(ad::square(ad::add_row(x, t.leaf(bias))));
       }},
      {"matmul",
       [&](Tape& t, Var x) {
         return ad::sum(ad::square(ad::matmul(x, t.constant(w))));
       }},
      {"relu",
       [&](Tape&, Var x) {
         return ad::sum(ad::hadamard(ad::relu(x), x));
       }},
      {"concat",
       [&](Tape& t, Var x) {
         return ad::sum(ad::square(ad::concat_cols(x, t.constant(other))));
       }},
      {"softmax",
       [&](Tape& t, Var x) {
         return ad::sum(ad::hadamard(ad::softmax_rows(x), t.constant(other)));
       }},
      {"log_softmax",
       [&](Tape& t, Var x) {
         return ad::sum(
             ad::hadamard(ad::log_softmax_rows(x), t.constant(other)));
       }},
      {"standardize",
       [&](Tape& t, Var x) {
         return ad::sum(
             ad::hadamard(ad::standardize_rows(x), t.constant(other)));
       }},
      {"pcc_matrix",
       [&](Tape& t, Var x) {
         return ad::sum(ad::square(ad::pcc_matrix(x, t.constant(other))));
       }},
      {"pcc_matrix_self",
       [&](Tape&, Var x) {
         return ad::sum(ad::square(ad::pcc_matrix(x, x)));
       }},
      {"reshape_slice",
       [&](Tape&, Var x) {
         return ad::sum(ad::square(ad::reshape_slice(x, 2, 2, 5)));
       }},
      {"mean",
       [&](Tape&, Var x) { return ad::mean(ad::square(x)); }},
      {"frobenius",
       [&](Tape&, Var x) { return ad::frobenius_norm(x); }},
  };
  for (const auto& [name, fn] : fns) {
    EXPECT_LT(finite_diff_gradcheck(fn, x0), 1e-5) << name;
  }
}

INSTANTIATE_TEST_SUITE_P(TenPoints, OpGradcheck, ::testing::Range(0, 10));

TEST(Autodiff, FrobeniusGradientAtOriginIsZero) {
  Tape tape;
  Var x = tape.leaf(Matrix::Zero(2, 2));
  tape.backward(ad::frobenius_norm(x));
  EXPECT_TRUE(x.grad().isZero(0.0));
}

TEST(Autodiff, ConstantsReceiveNoGradient) {
  Tape tape;
  Var c = tape.constant(Matrix::Ones(2, 3));
  Var x = tape.leaf(Matrix::Ones(2, 3));
  tape.backward(ad::sum(ad::hadamard(c, x)));
  EXPECT_FALSE(c.requires_grad());
  EXPECT_TRUE(c.grad().size() == 0 || c.grad().isZero(0.0));
}

}  // namespace
}  // namespace prg
