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

#ifndef PRG_GRAPH_HPP_
#define PRG_GRAPH_HPP_

#include <cstdint>

#include "prg/numerics/tape.hpp"

namespace prg {

enum class Side { kTeacher, kStudent };

// Integrated sample embeddings, one row per sample: features then logits.
struct SampleNodeSet {
  Matrix nodes;
  Side side = Side::kTeacher;

  Eigen::Index size() const { return nodes.rows(); }
  Eigen::Index dim() const { return nodes.cols(); }
};

struct NodeOptions {
  // z-score the feature block and the logit block separately before
  // concatenating, so the logit scale does not dominate the correlation.
  bool standardize = false;
};

SampleNodeSet build_nodes(const Matrix& features, const Matrix& logits,
                          Side side, NodeOptions opts = {});
// Differentiable counterpart used for the student path.
Var build_nodes(Var features, Var logits, NodeOptions opts = {});

// Class proxies in the integrated space, moved toward the nodes assigned to
// each class at rate alpha.
struct ProxyBank {
  Matrix proxies;  // c x D
  double alpha = 0.0;
  std::int64_t update_count = 0;
  std::uint64_t init_seed = 0;

  Eigen::Index n_classes() const { return proxies.rows(); }
  Eigen::Index dim() const { return proxies.cols(); }
};

// Standard-normal c x D bank. alpha must lie in (0, 1).
ProxyBank init_proxy_bank(std::int64_t n_classes, std::int64_t dim,
                          double alpha, std::uint64_t seed);

// Batch update: every class with at least one assigned node moves by
// alpha * mean(f - P_i), using the pre-update P_i for all of them. Classes
// with no assigned node are left untouched.
ProxyBank update_proxies(ProxyBank bank, const Matrix& nodes,
                         const IndexVector& assignment);

// b x c Pearson edges between sample nodes and proxies. Proxies never
// receive gradient.
Matrix edge_matrix(const Matrix& nodes, const ProxyBank& bank);
Var edge_matrix(Var nodes, const ProxyBank& bank);

// b x b Pearson matrix between teacher node i and student node j. The
// teacher side is constant.
Matrix node_cross_correlation(const Matrix& teacher, const Matrix& student);
Var node_cross_correlation(const Matrix& teacher, Var student);

}  // namespace prg

#endif  // PRG_GRAPH_HPP_
