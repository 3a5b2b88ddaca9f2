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

#ifndef PRG_NUMERICS_GRADCHECK_HPP_
#define PRG_NUMERICS_GRADCHECK_HPP_

#include <functional>

#include "prg/numerics/tape.hpp"

namespace prg {

// A scalar function recorded on the given tape with x as its only leaf.
using ScalarFn = std::function<Var(Tape&, Var)>;

// Compares the reverse-mode gradient of f at x with central differences.
// Returns max_i |g_ad - g_fd| / max(1, |g_fd|). Throws NumericError when f
// produces a non-finite value.
double finite_diff_gradcheck(const ScalarFn& f, const Matrix& x,
                             double h = 1e-6);

namespace ad {
// Identity forward, negated gradient backward. Fault-injection hook for
// exercising gradient checkers.
Var negate_gradient(Var a);
}  // namespace ad

}  // namespace prg

#endif  // PRG_NUMERICS_GRADCHECK_HPP_
