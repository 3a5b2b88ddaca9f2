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
#include <random>

#include <gtest/gtest.h>

#include "prg/errors.hpp"
#include "prg/gradcheck_suite.hpp"
#include "prg/graph.hpp"
#include "prg/losses.hpp"
#include "prg/numerics/ops.hpp"
#include "prg/student.hpp"
#include "test_util.hpp"

namespace prg {
namespace {

using testing::random_matrix;

StudentConfig small_config() {
  StudentConfig c;
  c.input_dim = 7;
  c.backbone_hidden = {8, 6};
  c.feature_dim = 5;
  c.n_classes = 3;
  c.teacher_dim = 4;
  c.init_seed = 9;
  return c;
}

TEST(InitStudent, DeterministicGlorotZeroBias) {
  const StudentConfig cfg = small_config();
  const StudentParams a = init_student(cfg);
  const StudentParams b = init_student(cfg);
  ASSERT_EQ(a.backbone.size(), 3u);
  EXPECT_EQ(a.tensor_count(), 12u);
  a.for_each([&](const std::string& name, const Matrix& m, bool is_bias) {
    if (is_bias) {
      EXPECT_TRUE(m.isZero(0.0)) << name;
      EXPECT_EQ(m.rows(), 1) << name;
    } else {
      const double bound = std::sqrt(6.0 / double(m.rows() + m.cols()));
      EXPECT_LE(m.cwiseAbs().maxCoeff(), bound) << name;
      // a uniform draw of this size comes close to the bound
      EXPECT_GT(m.cwiseAbs().maxCoeff(), 0.5 * bound) << name;
    }
  });
  std::vector<Matrix> ta, tb;
  a.for_each([&](const std::string&, const Matrix& m, bool) { ta.push_back(m); });
  b.for_each([&](const std::string&, const Matrix& m, bool) { tb.push_back(m); });
  EXPECT_EQ(ta, tb);

  StudentConfig other = cfg;
  other.init_seed = 10;
  EXPECT_NE(init_student(other).classifier.weight, a.classifier.weight);
}

TEST(InitStudent, ShapesFollowConfig) {
  const StudentConfig cfg = small_config();
  const StudentParams p = init_student(cfg);
  EXPECT_EQ(p.backbone[0].weight.rows(), 7);
  EXPECT_EQ(p.backbone[0].weight.cols(), 8);
  EXPECT_EQ(p.backbone[2].weight.cols(), 5);
  EXPECT_EQ(p.classifier.weight.rows(), 5);
  EXPECT_EQ(p.classifier.weight.cols(), 3);
  EXPECT_EQ(p.proj_in.weight.rows(), 5);
  EXPECT_EQ(p.proj_in.weight.cols(), 4);
  EXPECT_EQ(p.proj_out.weight.rows(), 4);
  EXPECT_EQ(p.proj_out.weight.cols(), 4);
}

TEST(InitStudent, InvalidWidthsRejected) {
  StudentConfig cfg = small_config();
  cfg.backbone_hidden = {8, 0};
  EXPECT_THROW(init_student(cfg), ValidationError);
  cfg = small_config();
  cfg.teacher_dim = 0;
  EXPECT_THROW(init_student(cfg), ValidationError);
}

TEST(Forward, ZeroParamsGiveZeroOutputs) {
  std::mt19937_64 rng(50);
  const StudentParams z = init_student(small_config()).zeros_like();
  const StudentOutputs o = forward(z, random_matrix(rng, 3, 7));
  EXPECT_TRUE(o.features.isZero(0.0));
  EXPECT_TRUE(o.projected.isZero(0.0));
  EXPECT_TRUE(o.logits.isZero(0.0));
}

TEST(Forward, SingleLayerHandCase) {
  StudentConfig cfg;
  cfg.input_dim = 2;
  cfg.backbone_hidden = {};
  cfg.feature_dim = 2;
  cfg.n_classes = 2;
  cfg.teacher_dim = 2;
  StudentParams p = init_student(cfg);
  p.backbone[0].weight = Matrix::Identity(2, 2);
  p.classifier.weight << 1, 2, 3, 4;
  p.classifier.bias << 0.5, -0.5;
  p.proj_in.weight = -Matrix::Identity(2, 2);
  p.proj_in.bias << 0, 1;
  p.proj_out.weight << 2, 0, 0, 3;
  Matrix x(1, 2);
  x << 1, -2;
  const StudentOutputs o = forward(p, x);
  // features = (1, -2); logits = (1 - 6 + 0.5, 2 - 8 - 0.5)
  EXPECT_EQ(o.features, x);
  EXPECT_EQ(o.logits(0, 0), -4.5);
  EXPECT_EQ(o.logits(0, 1), -6.5);
  // relu((-1, 2 + 1)) = (0, 3) -> (0, 9)
  EXPECT_EQ(o.projected(0, 0), 0.0);
  EXPECT_EQ(o.projected(0, 1), 9.0);
}

TEST(Forward, RowIndependence) {
  std::mt19937_64 rng(51);
  const StudentParams p = init_student(small_config());
  const Matrix x = random_matrix(rng, 6, 7);
  const StudentOutputs all = forward(p, x);
  for (int r = 0; r < 6; ++r) {
    const StudentOutputs one = forward(p, x.row(r));
    EXPECT_TRUE(one.logits.isApprox(all.logits.row(r), 1e-14));
    EXPECT_TRUE(one.projected.isApprox(all.projected.row(r), 1e-14));
  }
  const std::vector<std::int64_t> perm = {3, 0, 5, 1, 4, 2};
  const StudentOutputs permuted = forward(p, gather_rows(x, perm));
  EXPECT_EQ(permuted.logits, gather_rows(all.logits, perm));
  EXPECT_EQ(permuted.projected, gather_rows(all.projected, perm));
}

TEST(Forward, TapeMatchesPlainAndShapeErrors) {
  std::mt19937_64 rng(52);
  const StudentParams p = init_student(small_config());
  const Matrix x = random_matrix(rng, 4, 7);
  Tape tape;
  const StudentGraph g = forward(tape, p, x);
  const StudentOutputs o = forward(p, x);
  EXPECT_EQ(g.features.value(), o.features);
  EXPECT_EQ(g.projected.value(), o.projected);
  EXPECT_EQ(g.logits.value(), o.logits);
  EXPECT_THROW(forward(p, random_matrix(rng, 4, 6)), ShapeError);
}

TEST(ParameterGradients, NeedBackward) {
  std::mt19937_64 rng(53);
  const StudentParams p = init_student(small_config());
  Tape tape;
  const StudentGraph g = forward(tape, p, random_matrix(rng, 2, 7));
  EXPECT_THROW(parameter_gradients(g, p), StateError);
}

TEST(ParameterGradients, ClassifierBiasGradientSumsToZero) {
  std::mt19937_64 rng(54);
  const StudentParams p = init_student(small_config());
  Tape tape;
  const StudentGraph g = forward(tape, p, random_matrix(rng, 4, 7));
  const Var ce = soft_cross_entropy(g.logits, Matrix::Constant(4, 3, 1.0 / 3));
  tape.backward(ce);
  const StudentParams grads = parameter_gradients(g, p);
  EXPECT_NEAR(grads.classifier.bias.sum(), 0.0, 1e-15);
  EXPECT_GT(grads.classifier.bias.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ParameterGradients, ProjectionUntouchedWithoutGraphTerms) {
  std::mt19937_64 rng(55);
  const StudentConfig cfg = small_config();
  const StudentParams p = init_student(cfg);
  const Matrix x = random_matrix(rng, 4, 7);
  const Matrix tf = random_matrix(rng, 4, cfg.teacher_dim);
  const Matrix tl = random_matrix(rng, 4, cfg.n_classes, 10.0);
  const Matrix tn = build_nodes(tf, tl, Side::kTeacher).nodes;
  const ProxyBank pt = init_proxy_bank(3, 7, 0.1, 1);
  const ProxyBank ps = init_proxy_bank(3, 7, 0.1, 2);

  Tape tape;
  const StudentGraph g = forward(tape, p, x);
  const Var sn = build_nodes(g.projected, g.logits);
  const Var loss = total_loss(
      soft_cross_entropy(g.logits, softmax_rows(tl)),
      prg_loss(node_alignment_loss(node_cross_correlation(tn, sn)),
               edge_alignment_loss(edge_matrix(tn, pt), edge_matrix(sn, ps)),
               LossWeights{0.0, 0.0}));
  tape.backward(loss);
  const StudentParams grads = parameter_gradients(g, p);
  EXPECT_TRUE(grads.proj_in.weight.isZero(0.0));
  EXPECT_TRUE(grads.proj_in.bias.isZero(0.0));
  EXPECT_TRUE(grads.proj_out.weight.isZero(0.0));
  EXPECT_TRUE(grads.proj_out.bias.isZero(0.0));
  EXPECT_GT(grads.classifier.weight.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ParameterGradients, ThreeLayerStudentFullObjective) {
  GradcheckSuiteOptions opts;
  opts.hidden = {8, 6};
  opts.n_seeds = 3;
  for (const auto& e : run_gradcheck_suite(opts)) {
    EXPECT_LT(e.max_rel_error, 1e-5) << e.name;
  }
}

}  // namespace
}  // namespace prg
