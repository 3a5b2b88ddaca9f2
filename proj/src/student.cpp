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

#include "prg/student.hpp"

#include <cmath>
#include <random>

namespace prg {
namespace {

Affine glorot(std::int64_t fan_in, std::int64_t fan_out, std::mt19937_64& rng) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Affine a;
  a.weight.resize(fan_in, fan_out);
  for (Eigen::Index i = 0; i < a.weight.size(); ++i) {
    a.weight.data()[i] = dist(rng);
  }
  a.bias = Matrix::Zero(1, fan_out);
  return a;
}

Matrix affine(const Matrix& x, const Affine& a) {
  Matrix y = matmul(x, a.weight);
  y.rowwise() += a.bias.row(0);
  return y;
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

}  // namespace

void StudentConfig::validate() const {
  auto positive = [](std::int64_t v, const char* name) {
    if (v < 1) {
      throw ValidationError(std::string("student config: ") + name +
                            " must be >= 1");
    }
  };
  positive(input_dim, "input_dim");
  positive(feature_dim, "feature_dim");
  positive(n_classes, "n_classes");
  positive(teacher_dim, "teacher_dim");
  for (const auto w : backbone_hidden) positive(w, "backbone_hidden width");
}

StudentParams StudentParams::zeros_like() const {
  StudentParams z = *this;
  z.for_each([](const std::string&, Matrix& m, bool) { m.setZero(); });
  return z;
}

bool StudentParams::all_finite() const {
  bool ok = true;
  for_each([&ok](const std::string&, const Matrix& m, bool) {
    ok = ok && prg::all_finite(m);
  });
  return ok;
}

StudentParams init_student(const StudentConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.init_seed);
  StudentParams p;
  std::int64_t width = cfg.input_dim;
  for (const auto h : cfg.backbone_hidden) {
    p.backbone.push_back(glorot(width, h, rng));
    width = h;
  }
  p.backbone.push_back(glorot(width, cfg.feature_dim, rng));
  p.classifier = glorot(cfg.feature_dim, cfg.n_classes, rng);
  p.proj_in = glorot(cfg.feature_dim, cfg.teacher_dim, rng);
  p.proj_out = glorot(cfg.teacher_dim, cfg.teacher_dim, rng);
  return p;
}

StudentOutputs forward(const StudentParams& params, const Matrix& inputs) {
  if (params.backbone.empty()) throw StateError("student has no backbone");
  StudentOutputs out;
  Matrix h = inputs;
  for (std::size_t i = 0; i < params.backbone.size(); ++i) {
    h = affine(h, params.backbone[i]);
    if (i + 1 < params.backbone.size()) h = relu(h);
  }
  out.features = std::move(h);
  out.logits = affine(out.features, params.classifier);
  out.projected =
      affine(relu(affine(out.features, params.proj_in)), params.proj_out);
  return out;
}

StudentGraph forward(std::vector<Var> param_vars, std::size_t backbone_layers,
                     const Matrix& inputs) {
  if (backbone_layers == 0) throw StateError("student has no backbone");
  if (param_vars.size() != 2 * backbone_layers + 6) {
    throw ShapeError("student forward: expected " +
                     std::to_string(2 * backbone_layers + 6) +
                     " parameter tensors, got " +
                     std::to_string(param_vars.size()));
  }
  StudentGraph g;
  g.param_vars = std::move(param_vars);
  auto layer = [&g](Var x, std::size_t k) {
    return ad::add_row(ad::matmul(x, g.param_vars[2 * k]),
                       g.param_vars[2 * k + 1]);
  };
  const std::size_t nb = backbone_layers;
  Var h = g.param_vars.front().tape()->constant(inputs);
  for (std::size_t i = 0; i < nb; ++i) {
    h = layer(h, i);
    if (i + 1 < nb) h = ad::relu(h);
  }
  g.features = h;
  g.logits = layer(h, nb);
  g.projected = layer(ad::relu(layer(h, nb + 1)), nb + 2);
  return g;
}

StudentGraph forward(Tape& tape, const StudentParams& params,
                     const Matrix& inputs) {
  std::vector<Var> vars;
  params.for_each([&](const std::string&, const Matrix& m, bool) {
    vars.push_back(tape.leaf(m));
  });
  return forward(std::move(vars), params.backbone.size(), inputs);
}

StudentParams parameter_gradients(const StudentGraph& graph,
                                  const StudentParams& like) {
  if (graph.param_vars.empty() || !graph.param_vars.front().tape()->consumed()) {
    throw StateError("parameter_gradients: backward() has not run");
  }
  if (graph.param_vars.size() != like.tensor_count()) {
    throw StateError("parameter_gradients: graph does not match params");
  }
  StudentParams grads = like;
  std::size_t k = 0;
  grads.for_each([&](const std::string&, Matrix& m, bool) {
    m = graph.param_vars[k++].grad();
  });
  return grads;
}

}  // namespace prg
