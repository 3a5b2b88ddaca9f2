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

#ifndef PRG_LOSSES_HPP_
#define PRG_LOSSES_HPP_

#include <string>

#include "prg/numerics/tape.hpp"

namespace prg {

enum class Reduction {
  kFrobenius,   // sqrt(sum(x^2))
  kMeanSquare,  // mean(x^2)
};

Reduction parse_reduction(const std::string& name);
std::string to_string(Reduction r);

struct LossWeights {
  double node = 0.4;
  double edge = 0.2;
  Reduction reduction = Reduction::kFrobenius;
};

// -(1/b) sum_r sum_j t[r,j] log softmax(z)[r,j]. Teacher rows must be
// probability vectors (row sums within 1e-6).
Var soft_cross_entropy(Var student_logits, const Matrix& teacher_probs);

// Distance of a b x b correlation matrix from the identity.
Var node_alignment_loss(Var correlation, Reduction r = Reduction::kFrobenius);

// Distance between teacher and student edge matrices; the teacher side is a
// constant.
Var edge_alignment_loss(const Matrix& teacher_edges, Var student_edges,
                        Reduction r = Reduction::kFrobenius);

double prg_loss(double node_loss, double edge_loss, const LossWeights& w);
Var prg_loss(Var node_loss, Var edge_loss, const LossWeights& w);

double total_loss(double ce, double prg);
Var total_loss(Var ce, Var prg);

inline constexpr double kDefaultKdTemperature = 4.0;

// Temperature-scaled logit distillation:
// (T^2 / b) sum_r KL(softmax(t_r / T) || softmax(s_r / T)).
Var kd_baseline_loss(Var student_logits, const Matrix& teacher_logits,
                     double temperature = kDefaultKdTemperature);

}  // namespace prg

#endif  // PRG_LOSSES_HPP_
