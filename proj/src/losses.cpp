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

#include "prg/losses.hpp"

#include <cmath>

#include "prg/numerics/ops.hpp"

namespace prg {
namespace {

Var reduce(Var diff, Reduction r) {
  return r == Reduction::kFrobenius ? ad::frobenius_norm(diff)
                                    : ad::mean(ad::square(diff));
}

}  // namespace

Reduction parse_reduction(const std::string& name) {
  if (name == "frobenius") return Reduction::kFrobenius;
  if (name == "mean_square") return Reduction::kMeanSquare;
  throw ValidationError("unknown reduction '" + name +
                        "' (expected frobenius or mean_square)");
}

std::string to_string(Reduction r) {
  return r == Reduction::kFrobenius ? "frobenius" : "mean_square";
}

Var soft_cross_entropy(Var student_logits, const Matrix& teacher_probs) {
  const Matrix& z = student_logits.value();
  if (z.rows() != teacher_probs.rows() || z.cols() != teacher_probs.cols()) {
    throw ShapeError("soft_cross_entropy: student " + shape_str(z) +
                     " vs teacher " + shape_str(teacher_probs));
  }
  if (z.rows() == 0) throw ShapeError("soft_cross_entropy: empty batch");
  for (Eigen::Index r = 0; r < teacher_probs.rows(); ++r) {
    const double s = teacher_probs.row(r).sum();
    if (!(std::abs(s - 1.0) <= 1e-6) || (teacher_probs.row(r).array() < 0).any()) {
      throw ValidationError("soft_cross_entropy: teacher row " +
                            std::to_string(r) +
                            " is not a probability vector (sum " +
                            std::to_string(s) + ")");
    }
  }
  Tape& t = *student_logits.tape();
  const Var weighted = ad::hadamard(ad::log_softmax_rows(student_logits),
                                    t.constant(teacher_probs));
  return ad::scale(ad::sum(weighted), -1.0 / static_cast<double>(z.rows()));
}

Var node_alignment_loss(Var correlation, Reduction r) {
  if (correlation.rows() != correlation.cols()) {
    throw ShapeError("node_alignment_loss: correlation matrix " +
                     shape_str(correlation.value()) + " is not square");
  }
  Tape& t = *correlation.tape();
  const Var eye = t.constant(
      Matrix::Identity(correlation.rows(), correlation.cols()));
  return reduce(ad::sub(correlation, eye), r);
}

Var edge_alignment_loss(const Matrix& teacher_edges, Var student_edges,
                        Reduction r) {
  if (teacher_edges.rows() != student_edges.rows() ||
      teacher_edges.cols() != student_edges.cols()) {
    throw ShapeError("edge_alignment_loss: teacher " +
                     shape_str(teacher_edges) + " vs student " +
                     shape_str(student_edges.value()));
  }
  Tape& t = *student_edges.tape();
  return reduce(ad::sub(t.constant(teacher_edges), student_edges), r);
}

double prg_loss(double node_loss, double edge_loss, const LossWeights& w) {
  return w.node * node_loss + w.edge * edge_loss;
}

Var prg_loss(Var node_loss, Var edge_loss, const LossWeights& w) {
  return ad::add(ad::scale(node_loss, w.node), ad::scale(edge_loss, w.edge));
}

double total_loss(double ce, double prg) { return ce + prg; }

Var total_loss(Var ce, Var prg) { return ad::add(ce, prg); }

Var kd_baseline_loss(Var student_logits, const Matrix& teacher_logits,
                     double temperature) {
  if (!(temperature > 0.0)) {
    throw ValidationError("kd_baseline_loss: temperature must be > 0");
  }
  const Matrix& s = student_logits.value();
  if (s.rows() != teacher_logits.rows() || s.cols() != teacher_logits.cols()) {
    throw ShapeError("kd_baseline_loss: student " + shape_str(s) +
                     " vs teacher " + shape_str(teacher_logits));
  }
  if (s.rows() == 0) throw ShapeError("kd_baseline_loss: empty batch");
  const Matrix scaled_teacher = (1.0 / temperature) * teacher_logits;
  const Matrix p = softmax_rows(scaled_teacher);
  const Matrix log_p = log_softmax_rows(scaled_teacher);
  const double neg_entropy = p.cwiseProduct(log_p).sum();

  Tape& t = *student_logits.tape();
  const Var log_q =
      ad::log_softmax_rows(ad::scale(student_logits, 1.0 / temperature));
  const Var cross = ad::sum(ad::hadamard(log_q, t.constant(p)));
  // KL summed over the batch = sum p log p - sum p log q.
  Matrix offset(1, 1);
  offset(0, 0) = neg_entropy;
  const Var kl = ad::sub(t.constant(offset), cross);
  const double factor =
      temperature * temperature / static_cast<double>(s.rows());
  return ad::scale(kl, factor);
}

}  // namespace prg
