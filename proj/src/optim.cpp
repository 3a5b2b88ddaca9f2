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

#include "prg/optim.hpp"

#include <cmath>
#include <numbers>

namespace prg {

void adamw_step(std::span<const ParamRef> params, AdamWState& state,
                double lr, const AdamWConfig& cfg) {
  if (state.first_moment.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.first_moment.push_back(
          Matrix::Zero(p.value->rows(), p.value->cols()));
      state.second_moment.push_back(
          Matrix::Zero(p.value->rows(), p.value->cols()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ValidationError("adamw_step: optimizer state holds " +
                          std::to_string(state.first_moment.size()) +
                          " tensors, got " + std::to_string(params.size()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i].value;
    const Matrix& g = *params[i].grad;
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    if (g.rows() != p.rows() || g.cols() != p.cols() ||
        m.rows() != p.rows() || m.cols() != p.cols()) {
      throw ValidationError("adamw_step: shape mismatch on tensor " +
                            std::to_string(i) + " (" + shape_str(p) +
                            " vs grad " + shape_str(g) + ")");
    }
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseAbs2();
    const Matrix step =
        ((m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps)).matrix();
    if (params[i].decay && cfg.weight_decay != 0.0) {
      p -= lr * (step + cfg.weight_decay * p);
    } else {
      p -= lr * step;
    }
  }
}

void adamw_step(StudentParams& params, const StudentParams& grads,
                AdamWState& state, double lr, const AdamWConfig& cfg) {
  std::vector<const Matrix*> g;
  grads.for_each(
      [&g](const std::string&, const Matrix& m, bool) { g.push_back(&m); });
  std::vector<ParamRef> refs;
  std::size_t k = 0;
  params.for_each([&](const std::string&, Matrix& m, bool is_bias) {
    refs.push_back(ParamRef{&m, g.at(k++), !is_bias});
  });
  if (g.size() != refs.size()) {
    throw ValidationError("adamw_step: gradient set does not match params");
  }
  adamw_step(refs, state, lr, cfg);
}

double cosine_restart_lr(double epoch, const CosineRestartSchedule& s) {
  if (epoch < 0.0) throw ValidationError("cosine_restart_lr: epoch < 0");
  if (s.t0 < 1 || s.t_mult < 1) {
    throw ValidationError("cosine_restart_lr: t0 and t_mult must be >= 1");
  }
  double period = static_cast<double>(s.t0);
  double t_cur = epoch;
  if (s.t_mult == 1) {
    t_cur = std::fmod(epoch, period);
  } else {
    while (t_cur >= period) {
      t_cur -= period;
      period *= static_cast<double>(s.t_mult);
    }
  }
  return s.lr_min + 0.5 * (s.lr_max - s.lr_min) *
                        (1.0 + std::cos(std::numbers::pi * t_cur / period));
}

}  // namespace prg
