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

#ifndef PRG_PROMPT_WEIGHTING_HPP_
#define PRG_PROMPT_WEIGHTING_HPP_

#include <vector>

#include "prg/numerics/matrix.hpp"

namespace prg {

inline constexpr double kDefaultLogitScale = 100.0;

// One b x c logit matrix per prompt, all at logit scale tau.
struct PromptLogits {
  std::vector<Matrix> values;
  double tau = kDefaultLogitScale;
};

struct WeightedLogits {
  Matrix logits;             // b x c
  Matrix per_sample_weights; // b x p, rows on the probability simplex
};

// values[i] = tau * features * text[i]^T
PromptLogits per_prompt_logits(const Matrix& features,
                               const std::vector<Matrix>& text, double tau);

// Per-sample confidence weights: each prompt's weight is its max class logit
// over the sum of those maxima. Rows where any maximum is <= 0 fall back to
// uniform weights.
Matrix prompt_weights(const PromptLogits& pl);

WeightedLogits weighted_logits(const PromptLogits& pl, const Matrix& weights);

// Convenience: per_prompt_logits -> prompt_weights -> weighted_logits.
WeightedLogits prompt_weighted_logits(const Matrix& features,
                                      const std::vector<Matrix>& text,
                                      double tau);

// Standard zero-shot head: prompt embeddings averaged per class, then one
// product. Not equal to uniform weighting unless the mean is re-normalized.
Matrix plain_zero_shot_logits(const Matrix& features,
                              const std::vector<Matrix>& text, double tau);

Matrix soft_labels(const Matrix& logits);

// Row-wise argmax, lowest index on ties.
IndexVector teacher_predictions(const Matrix& logits);

}  // namespace prg

#endif  // PRG_PROMPT_WEIGHTING_HPP_
