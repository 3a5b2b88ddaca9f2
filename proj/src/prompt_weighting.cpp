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

#include "prg/prompt_weighting.hpp"

#include "prg/numerics/ops.hpp"

namespace prg {

PromptLogits per_prompt_logits(const Matrix& features,
                               const std::vector<Matrix>& text, double tau) {
  if (!(tau > 0.0)) throw ValidationError("logit scale tau must be > 0");
  if (text.empty()) throw ShapeError("per_prompt_logits: no prompts");
  PromptLogits pl;
  pl.tau = tau;
  pl.values.reserve(text.size());
  for (const Matrix& t : text) {
    if (t.cols() != features.cols() || t.rows() != text.front().rows()) {
      throw ShapeError("per_prompt_logits: text embedding " + shape_str(t) +
                       " incompatible with features " + shape_str(features));
    }
    pl.values.push_back(tau * (features * t.transpose()));
  }
  return pl;
}

Matrix prompt_weights(const PromptLogits& pl) {
  if (pl.values.empty()) throw ShapeError("prompt_weights: no prompts");
  const Eigen::Index b = pl.values.front().rows();
  const Eigen::Index p = static_cast<Eigen::Index>(pl.values.size());
  Matrix w(b, p);
  for (Eigen::Index r = 0; r < b; ++r) {
    bool positive = true;
    for (Eigen::Index i = 0; i < p; ++i) {
      const Matrix& wi = pl.values[static_cast<std::size_t>(i)];
      w(r, i) = wi.cols() > 0 ? wi.row(r).maxCoeff() : 0.0;
      positive = positive && w(r, i) > 0.0;
    }
    if (positive) {
      w.row(r) /= w.row(r).sum();
    } else {
      w.row(r).setConstant(1.0 / static_cast<double>(p));
    }
  }
  return w;
}

WeightedLogits weighted_logits(const PromptLogits& pl, const Matrix& weights) {
  if (pl.values.empty()) throw ShapeError("weighted_logits: no prompts");
  const Matrix& first = pl.values.front();
  if (weights.rows() != first.rows() ||
      weights.cols() != static_cast<Eigen::Index>(pl.values.size())) {
    throw ShapeError("weighted_logits: weights " + shape_str(weights) +
                     " do not match " + std::to_string(pl.values.size()) +
                     " prompts of " + shape_str(first));
  }
  WeightedLogits out;
  out.logits = Matrix::Zero(first.rows(), first.cols());
  for (std::size_t i = 0; i < pl.values.size(); ++i) {
    if (pl.values[i].rows() != first.rows() ||
        pl.values[i].cols() != first.cols()) {
      throw ShapeError("weighted_logits: prompt logits differ in shape");
    }
    out.logits += weights.col(static_cast<Eigen::Index>(i)).asDiagonal() *
                  pl.values[i];
  }
  out.per_sample_weights = weights;
  return out;
}

WeightedLogits prompt_weighted_logits(const Matrix& features,
                                      const std::vector<Matrix>& text,
                                      double tau) {
  const PromptLogits pl = per_prompt_logits(features, text, tau);
  return weighted_logits(pl, prompt_weights(pl));
}

Matrix plain_zero_shot_logits(const Matrix& features,
                              const std::vector<Matrix>& text, double tau) {
  if (!(tau > 0.0)) throw ValidationError("logit scale tau must be > 0");
  if (text.empty()) throw ShapeError("plain_zero_shot_logits: no prompts");
  Matrix mean = Matrix::Zero(text.front().rows(), text.front().cols());
  for (const Matrix& t : text) {
    if (t.rows() != mean.rows() || t.cols() != mean.cols()) {
      throw ShapeError("plain_zero_shot_logits: prompt shapes differ");
    }
    mean += t;
  }
  mean /= static_cast<double>(text.size());
  return tau * matmul(features, mean.transpose());
}

Matrix soft_labels(const Matrix& logits) { return softmax_rows(logits); }

IndexVector teacher_predictions(const Matrix& logits) {
  IndexVector out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < logits.cols(); ++j) {
      if (logits(r, j) > logits(r, best)) best = j;
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

}  // namespace prg
