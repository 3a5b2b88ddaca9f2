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

#include "prg/graph.hpp"

#include <random>

#include "prg/numerics/ops.hpp"

namespace prg {

SampleNodeSet build_nodes(const Matrix& features, const Matrix& logits,
                          Side side, NodeOptions opts) {
  if (features.rows() != logits.rows()) {
    throw ShapeError("build_nodes: features " + shape_str(features) +
                     " and logits " + shape_str(logits) +
                     " have different row counts");
  }
  SampleNodeSet out;
  out.side = side;
  out.nodes.resize(features.rows(), features.cols() + logits.cols());
  if (opts.standardize) {
    out.nodes << standardize_rows(features), standardize_rows(logits);
  } else {
    out.nodes << features, logits;
  }
  return out;
}

Var build_nodes(Var features, Var logits, NodeOptions opts) {
  if (features.rows() != logits.rows()) {
    throw ShapeError("build_nodes: features " + shape_str(features.value()) +
                     " and logits " + shape_str(logits.value()) +
                     " have different row counts");
  }
  if (opts.standardize) {
    return ad::concat_cols(ad::standardize_rows(features),
                           ad::standardize_rows(logits));
  }
  return ad::concat_cols(features, logits);
}

ProxyBank init_proxy_bank(std::int64_t n_classes, std::int64_t dim,
                          double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("proxy bank: alpha must lie in (0, 1), got " +
                          std::to_string(alpha));
  }
  if (n_classes < 1 || dim < 1) {
    throw ValidationError("proxy bank: needs at least one class and dim");
  }
  ProxyBank bank;
  bank.alpha = alpha;
  bank.init_seed = seed;
  bank.proxies.resize(n_classes, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < bank.proxies.size(); ++i) {
    bank.proxies.data()[i] = normal(rng);
  }
  return bank;
}

ProxyBank update_proxies(ProxyBank bank, const Matrix& nodes,
                         const IndexVector& assignment) {
  if (static_cast<Eigen::Index>(assignment.size()) != nodes.rows()) {
    throw ValidationError("update_proxies: " +
                          std::to_string(assignment.size()) +
                          " assignments for " +
                          std::to_string(nodes.rows()) + " nodes");
  }
  if (nodes.rows() > 0 && nodes.cols() != bank.dim()) {
    throw ShapeError("update_proxies: node dim " +
                     std::to_string(nodes.cols()) + " != proxy dim " +
                     std::to_string(bank.dim()));
  }
  const Eigen::Index c = bank.n_classes();
  Matrix sums = Matrix::Zero(c, bank.dim());
  std::vector<std::int64_t> counts(static_cast<std::size_t>(c), 0);
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    const auto k = assignment[r];
    if (k < 0 || k >= c) {
      throw ValidationError("update_proxies: assignment " +
                            std::to_string(k) + " outside [0, " +
                            std::to_string(c) + ")");
    }
    sums.row(k) += nodes.row(static_cast<Eigen::Index>(r));
    ++counts[static_cast<std::size_t>(k)];
  }
  for (Eigen::Index i = 0; i < c; ++i) {
    const auto n = counts[static_cast<std::size_t>(i)];
    if (n == 0) continue;
    const RowVector delta =
        sums.row(i) / static_cast<double>(n) - bank.proxies.row(i);
    bank.proxies.row(i) += bank.alpha * delta;
  }
  ++bank.update_count;
  return bank;
}

namespace {

void check_bank_dim(Eigen::Index node_dim, const ProxyBank& bank) {
  if (node_dim != bank.dim()) {
    throw ShapeError("edge_matrix: node dim " + std::to_string(node_dim) +
                     " != proxy dim " + std::to_string(bank.dim()));
  }
}

void check_pair(const Matrix& teacher, Eigen::Index rows, Eigen::Index cols) {
  if (teacher.rows() != rows || teacher.cols() != cols) {
    throw ShapeError("node_cross_correlation: teacher " +
                     shape_str(teacher) + " vs student " +
                     shape_str(rows, cols));
  }
}

}  // namespace

Matrix edge_matrix(const Matrix& nodes, const ProxyBank& bank) {
  check_bank_dim(nodes.cols(), bank);
  return pcc_matrix(nodes, bank.proxies);
}

Var edge_matrix(Var nodes, const ProxyBank& bank) {
  check_bank_dim(nodes.cols(), bank);
  return ad::pcc_matrix(nodes, nodes.tape()->constant(bank.proxies));
}

Matrix node_cross_correlation(const Matrix& teacher, const Matrix& student) {
  check_pair(teacher, student.rows(), student.cols());
  return pcc_matrix(teacher, student);
}

Var node_cross_correlation(const Matrix& teacher, Var student) {
  check_pair(teacher, student.rows(), student.cols());
  return ad::pcc_matrix(student.tape()->constant(teacher), student);
}

}  // namespace prg
