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

#include "prg/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace prg {
namespace {

double eval_value(const ScalarFn& f, const Matrix& x) {
  Tape tape;
  const Var out = f(tape, tape.constant(x));
  const double v = out.scalar();
  if (!std::isfinite(v)) {
    throw NumericError("gradcheck: function value is not finite");
  }
  return v;
}

}  // namespace

double finite_diff_gradcheck(const ScalarFn& f, const Matrix& x, double h) {
  if (!(h > 0.0)) throw ValidationError("gradcheck: step h must be > 0");
  Matrix analytic;
  {
    Tape tape;
    const Var leaf = tape.leaf(x);
    const Var out = f(tape, leaf);
    if (!std::isfinite(out.scalar())) {
      throw NumericError("gradcheck: function value is not finite");
    }
    tape.backward(out);
    analytic = leaf.grad();
  }
  double worst = 0.0;
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double up = eval_value(f, probe);
      probe(i, j) = orig - h;
      const double down = eval_value(f, probe);
      probe(i, j) = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double err =
          std::abs(analytic(i, j) - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

namespace ad {

Var negate_gradient(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value(), a.requires_grad(),
                  [a](Tape& tp, std::size_t self) {
                    if (tp.requires_grad(a.id())) {
                      tp.grad_mut(a.id()) -= tp.grad(self);
                    }
                  });
}

}  // namespace ad
}  // namespace prg
