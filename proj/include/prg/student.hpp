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

#ifndef PRG_STUDENT_HPP_
#define PRG_STUDENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "prg/numerics/tape.hpp"

namespace prg {

struct StudentConfig {
  std::int64_t input_dim = 0;
  std::vector<std::int64_t> backbone_hidden = {128};
  std::int64_t feature_dim = 64;  // backbone output width
  std::int64_t n_classes = 0;
  std::int64_t teacher_dim = 0;  // projection output width
  std::uint64_t init_seed = 0;

  void validate() const;
  bool operator==(const StudentConfig&) const = default;
};

// y = x * weight + bias, weight is fan_in x fan_out, bias is 1 x fan_out.
struct Affine {
  Matrix weight;
  Matrix bias;
};

struct StudentParams {
  std::vector<Affine> backbone;
  Affine classifier;
  Affine proj_in;
  Affine proj_out;

  // Visits every tensor in a fixed order: f(name, tensor, is_bias).
  template <typename F>
  void for_each(F&& f) {
    for (std::size_t i = 0; i < backbone.size(); ++i) {
      const std::string p = "backbone." + std::to_string(i);
      f(p + ".weight", backbone[i].weight, false);
      f(p + ".bias", backbone[i].bias, true);
    }
    f("classifier.weight", classifier.weight, false);
    f("classifier.bias", classifier.bias, true);
    f("proj_in.weight", proj_in.weight, false);
    f("proj_in.bias", proj_in.bias, true);
    f("proj_out.weight", proj_out.weight, false);
    f("proj_out.bias", proj_out.bias, true);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<StudentParams*>(this)->for_each(
        [&f](const std::string& name, Matrix& m, bool is_bias) {
          f(name, static_cast<const Matrix&>(m), is_bias);
        });
  }

  StudentParams zeros_like() const;
  bool all_finite() const;
  std::size_t tensor_count() const { return 2 * backbone.size() + 6; }
};

// Glorot-uniform weights, zero biases, deterministic in cfg.init_seed.
StudentParams init_student(const StudentConfig& cfg);

struct StudentOutputs {
  Matrix features;   // S_ori, b x s
  Matrix projected;  // F_ori, b x d
  Matrix logits;     // W^s, b x c
};

StudentOutputs forward(const StudentParams& params, const Matrix& inputs);

// Forward pass recorded on a tape with every parameter as a leaf.
struct StudentGraph {
  std::vector<Var> param_vars;  // StudentParams::for_each order
  Var features;
  Var projected;
  Var logits;
};

StudentGraph forward(Tape& tape, const StudentParams& params,
                     const Matrix& inputs);

// Same pass over caller-supplied parameter Vars (StudentParams::for_each
// order, backbone_layers affine layers in the backbone).
StudentGraph forward(std::vector<Var> param_vars, std::size_t backbone_layers,
                     const Matrix& inputs);

// Collects d(loss)/d(param) after tape.backward() has run.
StudentParams parameter_gradients(const StudentGraph& graph,
                                  const StudentParams& like);

}  // namespace prg

#endif  // PRG_STUDENT_HPP_
