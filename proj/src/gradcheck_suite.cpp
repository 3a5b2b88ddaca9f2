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

#include "prg/gradcheck_suite.hpp"

#include <algorithm>
#include <random>

#include "prg/graph.hpp"
#include "prg/losses.hpp"
#include "prg/numerics/gradcheck.hpp"
#include "prg/numerics/ops.hpp"
#include "prg/prompt_weighting.hpp"
#include "prg/student.hpp"

namespace prg {
namespace {

struct Instance {
  Matrix inputs;
  Matrix teacher_logits;
  Matrix teacher_probs;
  Matrix teacher_nodes;
  Matrix teacher_feature_nodes;
  Matrix teacher_std_nodes;
  ProxyBank proxy_teacher;
  ProxyBank proxy_student;
  ProxyBank proxy_teacher_features;
  ProxyBank proxy_student_features;
  StudentParams params;
  Matrix flat_params;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
};

Matrix unit_rows(Matrix m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r).normalize();
  return m;
}

Instance make_instance(const GradcheckSuiteOptions& o, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };
  Instance in;
  in.inputs = draw(o.batch, o.input_dim);
  const Matrix features = unit_rows(draw(o.batch, o.teacher_dim));
  std::vector<Matrix> text;
  for (std::int64_t p = 0; p < o.prompts; ++p) {
    text.push_back(unit_rows(draw(o.classes, o.teacher_dim)));
  }
  in.teacher_logits = prompt_weighted_logits(features, text, o.tau).logits;
  in.teacher_probs = soft_labels(in.teacher_logits);
  in.teacher_nodes =
      build_nodes(features, in.teacher_logits, Side::kTeacher).nodes;
  in.teacher_std_nodes =
      build_nodes(features, in.teacher_logits, Side::kTeacher, {true}).nodes;
  in.teacher_feature_nodes = features;
  const std::int64_t dim = o.teacher_dim + o.classes;
  in.proxy_teacher = init_proxy_bank(o.classes, dim, 0.01, seed * 4 + 1);
  in.proxy_student = init_proxy_bank(o.classes, dim, 0.01, seed * 4 + 2);
  in.proxy_teacher_features =
      init_proxy_bank(o.classes, o.teacher_dim, 0.01, seed * 4 + 3);
  in.proxy_student_features =
      init_proxy_bank(o.classes, o.teacher_dim, 0.01, seed * 4 + 4);

  StudentConfig cfg;
  cfg.input_dim = o.input_dim;
  cfg.backbone_hidden = o.hidden;
  cfg.feature_dim = o.student_dim;
  cfg.n_classes = o.classes;
  cfg.teacher_dim = o.teacher_dim;
  cfg.init_seed = seed;
  in.params = init_student(cfg);
  // Glorot init leaves biases at zero; nudge them so bias gradients are
  // exercised away from a special point.
  in.params.for_each([&](const std::string&, Matrix& m, bool is_bias) {
    if (is_bias) m = 0.1 * draw(m.rows(), m.cols());
  });
  Eigen::Index total = 0;
  in.params.for_each([&](const std::string&, const Matrix& m, bool) {
    in.shapes.emplace_back(m.rows(), m.cols());
    total += m.size();
  });
  in.flat_params.resize(1, total);
  Eigen::Index off = 0;
  in.params.for_each([&](const std::string&, const Matrix& m, bool) {
    std::copy(m.data(), m.data() + m.size(), in.flat_params.data() + off);
    off += m.size();
  });
  return in;
}

StudentGraph student_from_flat(const Instance& in, Var flat) {
  std::vector<Var> vars;
  Eigen::Index off = 0;
  for (const auto& [r, c] : in.shapes) {
    vars.push_back(ad::reshape_slice(flat, off, r, c));
    off += r * c;
  }
  return forward(std::move(vars), in.params.backbone.size(), in.inputs);
}

Var loss_by_name(const std::string& name, const Instance& in, Var flat) {
  const StudentGraph g = student_from_flat(in, flat);
  const LossWeights w;
  auto ce = [&] { return soft_cross_entropy(g.logits, in.teacher_probs); };
  auto graph_losses = [&](const Matrix& tnodes, Var snodes,
                          const ProxyBank& pt, const ProxyBank& ps,
                          Reduction r) {
    const Var node =
        node_alignment_loss(node_cross_correlation(tnodes, snodes), r);
    const Var edge = edge_alignment_loss(edge_matrix(tnodes, pt),
                                         edge_matrix(snodes, ps), r);
    return std::pair{node, edge};
  };
  const Var snodes = build_nodes(g.projected, g.logits);
  if (name == "soft_cross_entropy") return ce();
  if (name == "node_alignment" || name == "edge_alignment" ||
      name == "node_alignment_mean_square" ||
      name == "edge_alignment_mean_square") {
    const Reduction r = name.ends_with("mean_square") ? Reduction::kMeanSquare
                                                       : Reduction::kFrobenius;
    const auto [node, edge] = graph_losses(
        in.teacher_nodes, snodes, in.proxy_teacher, in.proxy_student, r);
    return name.starts_with("node") ? node : edge;
  }
  if (name == "prg_total") {
    const auto [node, edge] =
        graph_losses(in.teacher_nodes, snodes, in.proxy_teacher,
                     in.proxy_student, Reduction::kFrobenius);
    return total_loss(ce(), prg_loss(node, edge, w));
  }
  if (name == "prg_standardized_nodes") {
    const Var std_nodes = build_nodes(g.projected, g.logits, {true});
    const auto [node, edge] =
        graph_losses(in.teacher_std_nodes, std_nodes, in.proxy_teacher,
                     in.proxy_student, Reduction::kFrobenius);
    return total_loss(ce(), prg_loss(node, edge, w));
  }
  if (name == "prg_feature_nodes") {
    const auto [node, edge] = graph_losses(
        in.teacher_feature_nodes, g.projected, in.proxy_teacher_features,
        in.proxy_student_features, Reduction::kFrobenius);
    return total_loss(ce(), prg_loss(node, edge, w));
  }
  if (name == "kd_baseline_total") {
    return total_loss(ce(), kd_baseline_loss(g.logits, in.teacher_logits));
  }
  throw ValidationError("gradcheck: unknown loss '" + name + "'");
}

}  // namespace

std::vector<std::string> gradcheck_loss_names() {
  return {"soft_cross_entropy",        "node_alignment",
          "edge_alignment",            "node_alignment_mean_square",
          "edge_alignment_mean_square", "prg_total",
          "prg_standardized_nodes",    "prg_feature_nodes",
          "kd_baseline_total"};
}

std::vector<GradcheckEntry> run_gradcheck_suite(
    const GradcheckSuiteOptions& opts) {
  const auto names = gradcheck_loss_names();
  if (!opts.inject_fault.empty() &&
      std::find(names.begin(), names.end(), opts.inject_fault) ==
          names.end()) {
    throw ValidationError("gradcheck: unknown loss '" + opts.inject_fault +
                          "' for fault injection");
  }
  std::vector<GradcheckEntry> out;
  for (const auto& n : names) out.push_back({n, 0.0});
  for (int k = 0; k < opts.n_seeds; ++k) {
    const Instance in =
        make_instance(opts, opts.seed + static_cast<std::uint64_t>(k));
    for (auto& entry : out) {
      const bool flip = entry.name == opts.inject_fault;
      const ScalarFn f = [&in, &entry, flip](Tape&, Var flat) {
        const Var loss = loss_by_name(entry.name, in, flat);
        return flip ? ad::negate_gradient(loss) : loss;
      };
      entry.max_rel_error = std::max(
          entry.max_rel_error,
          finite_diff_gradcheck(f, in.flat_params, opts.h));
    }
  }
  return out;
}

}  // namespace prg
