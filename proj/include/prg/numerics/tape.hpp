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

#ifndef PRG_NUMERICS_TAPE_HPP_
#define PRG_NUMERICS_TAPE_HPP_

#include <cstddef>
#include <deque>
#include <functional>

#include "prg/numerics/matrix.hpp"

namespace prg {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  bool requires_grad() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Single-use reverse-mode recorder. Nodes are appended in evaluation order,
// so walking them backwards is a valid topological order and visits each
// node exactly once.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value);
  Var constant(Matrix value);

  // Records a derived node. parents_need_grad tells whether any input is
  // differentiable; when false the node is a constant and fn is dropped.
  Var record(Matrix value, bool parents_need_grad, Backward fn);

  // Propagates d(loss)/d(node) to every differentiable node. A tape can be
  // run backwards once.
  void backward(Var loss);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  Matrix& grad_mut(std::size_t id) { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const {
    return nodes_[id].requires_grad;
  }
  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  std::deque<Node> nodes_;
  bool consumed_ = false;
};

namespace ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
// a (r x n) plus a 1 x n bias broadcast over rows.
Var add_row(Var a, Var bias);
Var matmul(Var a, Var b);
Var relu(Var a);
Var hadamard(Var a, Var b);
Var concat_cols(Var a, Var b);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
// Per-row z-score; the variance term carries a 1e-12 floor.
Var standardize_rows(Var a);
Var pcc_matrix(Var a, Var b);
// rows x cols block read row-major from a's storage starting at offset.
Var reshape_slice(Var a, Eigen::Index offset, Eigen::Index rows,
                  Eigen::Index cols);
Var sum(Var a);
Var mean(Var a);
Var square(Var a);
// sqrt(sum of squares). The gradient at the origin is taken as zero.
Var frobenius_norm(Var a);

}  // namespace ad

inline Var operator+(Var a, Var b) { return ad::add(a, b); }
inline Var operator-(Var a, Var b) { return ad::sub(a, b); }
inline Var operator*(double s, Var a) { return ad::scale(a, s); }

}  // namespace prg

#endif  // PRG_NUMERICS_TAPE_HPP_
