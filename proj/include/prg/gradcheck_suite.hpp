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

#ifndef PRG_GRADCHECK_SUITE_HPP_
#define PRG_GRADCHECK_SUITE_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace prg {

// Seeded random distillation instances on which every training objective is
// differentiated end-to-end with respect to all student parameters.
struct GradcheckSuiteOptions {
  std::uint64_t seed = 0;
  int n_seeds = 10;  // seeds seed, seed+1, ...
  double h = 1e-6;
  std::int64_t batch = 4;
  std::int64_t classes = 3;
  std::int64_t teacher_dim = 5;
  std::int64_t prompts = 2;
  std::int64_t student_dim = 6;
  std::int64_t input_dim = 7;
  std::vector<std::int64_t> hidden = {8};
  double tau = 100.0;
  // Name of a loss whose gradient gets its sign flipped (test hook).
  std::string inject_fault;
};

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0.0;  // worst over all seeds
};

std::vector<std::string> gradcheck_loss_names();

std::vector<GradcheckEntry> run_gradcheck_suite(
    const GradcheckSuiteOptions& opts);

}  // namespace prg

#endif  // PRG_GRADCHECK_SUITE_HPP_
