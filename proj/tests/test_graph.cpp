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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "prg/errors.hpp"
#include "prg/graph.hpp"
#include "prg/losses.hpp"
#include "prg/numerics/ops.hpp"
#include "test_util.hpp"

namespace prg {
namespace {

using testing::random_matrix;

double loop_pcc(const RowVector& x, const RowVector& y) {
  const double mx = x.mean(), my = y.mean();
  double sxy = 0, sxx = 0, syy = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sxy += (x(i) - mx) * (y(i) - my);
    sxx += (x(i) - mx) * (x(i) - mx);
    syy += (y(i) - my) * (y(i) - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

TEST(BuildNodes, FeaturesThenLogits) {
  Matrix f(1, 2), l(1, 2);
  f << 1, 0;
  l << 3, 4;
  const SampleNodeSet s = build_nodes(f, l, Side::kTeacher);
  Matrix expected(1, 4);
  expected << 1, 0, 3, 4;
  EXPECT_EQ(s.nodes, expected);
  EXPECT_EQ(s.side, Side::kTeacher);
}

TEST(BuildNodes, EmptyBatchAndShapeErrors) {
  const SampleNodeSet s =
      build_nodes(Matrix(0, 3), Matrix(0, 2), Side::kStudent);
  EXPECT_EQ(s.size(), 0);
  EXPECT_EQ(s.dim(), 5);
  EXPECT_THROW(build_nodes(Matrix::Zero(4, 3), Matrix::Zero(3, 2),
                           Side::kTeacher),
               ShapeError);
}

TEST(BuildNodes, VarMatchesMatrix) {
  std::mt19937_64 rng(30);
  const Matrix f = random_matrix(rng, 4, 3);
  const Matrix l = random_matrix(rng, 4, 2, 50.0);
  for (const bool standardize : {false, true}) {
    Tape tape;
    const Var v = build_nodes(tape.leaf(f), tape.leaf(l), {standardize});
    EXPECT_TRUE(v.value().isApprox(
        build_nodes(f, l, Side::kStudent, {standardize}).nodes, 1e-15));
  }
}

TEST(ProxyBank, InitDeterministicAndStandardNormal) {
  const ProxyBank a = init_proxy_bank(100, 120, 0.01, 5);
  const ProxyBank b = init_proxy_bank(100, 120, 0.01, 5);
  EXPECT_EQ(a.proxies, b.proxies);
  EXPECT_EQ(a.init_seed, 5u);
  EXPECT_EQ(a.update_count, 0);
  const double mean = a.proxies.mean();
  const double var =
      (a.proxies.array() - mean).square().sum() / (a.proxies.size() - 1);
  EXPECT_NEAR(mean, 0.0, 0.05);
  EXPECT_NEAR(var, 1.0, 0.05);
  EXPECT_NE(init_proxy_bank(100, 120, 0.01, 6).proxies, a.proxies);
}

TEST(ProxyBank, AlphaOutsideOpenUnitIntervalRejected) {
  EXPECT_THROW(init_proxy_bank(3, 4, 0.0, 1), ValidationError);
  EXPECT_THROW(init_proxy_bank(3, 4, 1.0, 1), ValidationError);
  EXPECT_THROW(init_proxy_bank(3, 4, -0.1, 1), ValidationError);
}

TEST(UpdateProxies, HandCase) {
  ProxyBank bank = init_proxy_bank(2, 2, 0.5, 1);
  bank.proxies.row(0).setZero();
  const Matrix other = bank.proxies.row(1);
  Matrix nodes(2, 2);
  nodes << 2, 2, 2, 2;
  const ProxyBank out = update_proxies(bank, nodes, {0, 0});
  EXPECT_EQ(out.proxies(0, 0), 1.0);
  EXPECT_EQ(out.proxies(0, 1), 1.0);
  EXPECT_EQ(out.proxies.row(1), other.row(0));  // empty class untouched
  EXPECT_EQ(out.update_count, 1);
}

TEST(UpdateProxies, BatchFormUsesPreUpdateProxy) {
  ProxyBank bank = init_proxy_bank(1, 2, 0.5, 1);
  bank.proxies.setZero();
  Matrix nodes(2, 2);
  nodes << 4, 0, 0, 4;
  const ProxyBank out = update_proxies(bank, nodes, {0, 0});
  // mean(f - P) = (2, 2); sequential updates would give (1, 2).
  EXPECT_EQ(out.proxies(0, 0), 1.0);
  EXPECT_EQ(out.proxies(0, 1), 1.0);
}

TEST(UpdateProxies, ClosedFormRecurrence) {
  std::mt19937_64 rng(31);
  for (const double alpha : {1e-4, 1e-3, 1e-2, 0.3}) {
    ProxyBank bank = init_proxy_bank(3, 5, alpha, 2);
    const Matrix p0 = bank.proxies;
    const Matrix fbar = random_matrix(rng, 1, 5);
    Matrix nodes(4, 5);
    for (int r = 0; r < 4; ++r) nodes.row(r) = fbar;
    for (int k = 1; k <= 25; ++k) {
      bank = update_proxies(bank, nodes, {1, 1, 1, 1});
      const RowVector expected =
          fbar + std::pow(1.0 - alpha, k) * (p0.row(1) - fbar);
      EXPECT_LT((bank.proxies.row(1) - expected).cwiseAbs().maxCoeff(),
                1e-10)
          << "alpha " << alpha << " k " << k;
      EXPECT_EQ(bank.proxies.row(0), p0.row(0));
    }
  }
}

TEST(UpdateProxies, PermutationInvariantWithinClass) {
  std::mt19937_64 rng(32);
  const ProxyBank bank = init_proxy_bank(3, 4, 0.2, 3);
  const Matrix nodes = random_matrix(rng, 6, 4);
  const IndexVector assign = {0, 2, 0, 1, 0, 2};
  std::vector<int> perm = {4, 2, 0, 5, 1, 3};
  Matrix pn(6, 4);
  IndexVector pa(6);
  for (int i = 0; i < 6; ++i) {
    pn.row(i) = nodes.row(perm[i]);
    pa[i] = assign[perm[i]];
  }
  const ProxyBank a = update_proxies(bank, nodes, assign);
  const ProxyBank b = update_proxies(bank, pn, pa);
  EXPECT_TRUE(a.proxies.isApprox(b.proxies, 1e-14));
}

TEST(UpdateProxies, RejectsBadInput) {
  const ProxyBank bank = init_proxy_bank(2, 3, 0.2, 3);
  EXPECT_THROW(update_proxies(bank, Matrix::Zero(2, 4), {0, 1}), ShapeError);
  EXPECT_THROW(update_proxies(bank, Matrix::Zero(2, 3), {0, 2}),
               ValidationError);
  EXPECT_THROW(update_proxies(bank, Matrix::Zero(2, 3), {0}), ValidationError);
}

TEST(UpdateProxies, BoundedUnderBoundedNodes) {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> cls(0, 3);
  ProxyBank bank = init_proxy_bank(4, 6, 0.05, 4);
  const double bound = std::max(bank.proxies.cwiseAbs().maxCoeff(), 1.0);
  for (int step = 0; step < 500; ++step) {
    Matrix nodes = Matrix::Random(8, 6);  // entries in [-1, 1]
    IndexVector a(8);
    for (auto& x : a) x = cls(rng);
    bank = update_proxies(bank, nodes, a);
    EXPECT_LE(bank.proxies.cwiseAbs().maxCoeff(), bound + 1e-12);
  }
}

TEST(EdgeMatrix, SelfAndAntisymmetricCases) {
  std::mt19937_64 rng(34);
  ProxyBank bank = init_proxy_bank(3, 5, 0.1, 5);
  Matrix nodes(2, 5);
  nodes.row(0) = bank.proxies.row(2);
  nodes.row(1) = (-bank.proxies.row(1).array() + 7.0).matrix();
  const Matrix e = edge_matrix(nodes, bank);
  EXPECT_NEAR(e(0, 2), 1.0, 1e-14);
  EXPECT_NEAR(e(1, 1), -1.0, 1e-14);
}

TEST(EdgeMatrix, MatchesLoopOracleAndRange) {
  std::mt19937_64 rng(35);
  const ProxyBank bank = init_proxy_bank(3, 6, 0.1, 6);
  const Matrix nodes = random_matrix(rng, 4, 6);
  const Matrix e = edge_matrix(nodes, bank);
  ASSERT_EQ(e.rows(), 4);
  ASSERT_EQ(e.cols(), 3);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(e(i, j), loop_pcc(nodes.row(i), bank.proxies.row(j)),
                  1e-14);
    }
  }
  EXPECT_LE(e.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  EXPECT_THROW(edge_matrix(Matrix::Zero(4, 5), bank), ShapeError);
}

TEST(EdgeMatrix, ProxiesAreConstant) {
  std::mt19937_64 rng(36);
  const ProxyBank bank = init_proxy_bank(3, 6, 0.1, 7);
  const Matrix teacher_e = edge_matrix(random_matrix(rng, 4, 6), bank);
  Tape tape;
  Var nodes = tape.leaf(random_matrix(rng, 4, 6));
  Var loss = edge_alignment_loss(teacher_e, edge_matrix(nodes, bank));
  const std::size_t before = tape.size();
  tape.backward(loss);
  EXPECT_EQ(tape.size(), before);
  for (std::size_t id = 0; id < tape.size(); ++id) {
    const Matrix& v = tape.value(id);
    if (v.rows() == bank.proxies.rows() && v.cols() == bank.proxies.cols() &&
        v == bank.proxies) {
      EXPECT_FALSE(tape.requires_grad(id));
    }
  }
  EXPECT_GT(nodes.grad().cwiseAbs().maxCoeff(), 0.0);
}

TEST(NodeCrossCorrelation, DiagonalCasesAndOracle) {
  std::mt19937_64 rng(37);
  const Matrix t = random_matrix(rng, 4, 9);
  const Matrix same = node_cross_correlation(t, t);
  const Matrix affine =
      node_cross_correlation(t, (2.0 * t.array() + 5.0).matrix());
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(same(i, i), 1.0, 1e-14);
    EXPECT_NEAR(affine(i, i), 1.0, 1e-14);
  }
  const Matrix s = random_matrix(rng, 4, 9);
  const Matrix c = node_cross_correlation(t, s);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      EXPECT_NEAR(c(i, j), loop_pcc(t.row(i), s.row(j)), 1e-14);
    }
  }
  EXPECT_THROW(node_cross_correlation(t, Matrix::Zero(4, 8)), ShapeError);
  EXPECT_THROW(node_cross_correlation(t, Matrix::Zero(3, 9)), ShapeError);
}

TEST(NodeCrossCorrelation, VarMatchesMatrix) {
  std::mt19937_64 rng(38);
  const Matrix t = random_matrix(rng, 5, 7);
  const Matrix s = random_matrix(rng, 5, 7);
  Tape tape;
  EXPECT_TRUE(node_cross_correlation(t, tape.leaf(s))
                  .value()
                  .isApprox(node_cross_correlation(t, s), 1e-15));
}

}  // namespace
}  // namespace prg
