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

#ifndef PRG_OPTIM_HPP_
#define PRG_OPTIM_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "prg/student.hpp"

namespace prg {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

struct AdamWState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step = 0;
};

struct ParamRef {
  Matrix* value;
  const Matrix* grad;
  bool decay;  // biases are excluded from weight decay
};

// Bias-corrected Adam step with decoupled weight decay:
//   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
// where the decay term uses the pre-step value. State is sized on first use.
void adamw_step(std::span<const ParamRef> params, AdamWState& state,
                double lr, const AdamWConfig& cfg);

void adamw_step(StudentParams& params, const StudentParams& grads,
                AdamWState& state, double lr, const AdamWConfig& cfg);

struct CosineRestartSchedule {
  double lr_max = 0.03;
  double lr_min = 0.0;
  std::int64_t t0 = 10;
  std::int64_t t_mult = 2;
};

// SGDR warm restarts: periods t0, t0*t_mult, t0*t_mult^2, ... and
// lr = lr_min + (lr_max - lr_min) * (1 + cos(pi * t_cur / t_i)) / 2.
double cosine_restart_lr(double epoch, const CosineRestartSchedule& s);

}  // namespace prg

#endif  // PRG_OPTIM_HPP_
