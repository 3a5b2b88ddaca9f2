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

#include "prg/numerics/tape.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "prg/numerics/ops.hpp"

namespace prg {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("Var::scalar on " + shape_str(v) + " value");
  }
  return v(0, 0);
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.grad = Matrix::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, bool parents_need_grad, Backward fn) {
  if (consumed_) {
    throw StateError("tape already consumed by backward()");
  }
  Node n;
  n.value = std::move(value);
  if (parents_need_grad) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.requires_grad = true;
    n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (consumed_) {
    throw StateError("tape reused: backward() already ran");
  }
  if (loss.tape() != this) {
    throw StateError("backward() called with a Var from another tape");
  }
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward() needs a 1x1 loss, got " + shape_str(lv));
  }
  consumed_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad(0, 0) = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) {
      n.backward(*this, i);
    }
  }
}

namespace ad {
namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw StateError(std::string(op) + ": operands live on different tapes");
  }
  return *a.tape();
}

void accumulate(Tape& t, Var v, const Matrix& g) {
  if (t.requires_grad(v.id())) t.grad_mut(v.id()) += g;
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch (" +
                     shape_str(a.value()) + " vs " + shape_str(b.value()) +
                     ")");
  }
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  require_same_shape(a, b, "add");
  return t.record(a.value() + b.value(),
                  a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& tp, std::size_t self) {
                    accumulate(tp, a, tp.grad(self));
                    accumulate(tp, b, tp.grad(self));
                  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  require_same_shape(a, b, "sub");
  return t.record(a.value() - b.value(),
                  a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& tp, std::size_t self) {
                    accumulate(tp, a, tp.grad(self));
                    accumulate(tp, b, -tp.grad(self));
                  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  return t.record(s * a.value(), a.requires_grad(),
                  [a, s](Tape& tp, std::size_t self) {
                    accumulate(tp, a, s * tp.grad(self));
                  });
}

Var add_row(Var a, Var bias) {
  Tape& t = same_tape(a, bias, "add_row");
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw ShapeError("add_row: bias " + shape_str(bias.value()) +
                     " does not fit " + shape_str(a.value()));
  }
  Matrix out = a.value();
  out.rowwise() += bias.value().row(0);
  return t.record(std::move(out), a.requires_grad() || bias.requires_grad(),
                  [a, bias](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    accumulate(tp, a, g);
                    if (tp.requires_grad(bias.id())) {
                      tp.grad_mut(bias.id()) += g.colwise().sum();
                    }
                  });
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  Matrix out = prg::matmul(a.value(), b.value());
  return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    if (tp.requires_grad(a.id())) {
                      tp.grad_mut(a.id()).noalias() +=
                          g * b.value().transpose();
                    }
                    if (tp.requires_grad(b.id())) {
                      tp.grad_mut(b.id()).noalias() +=
                          a.value().transpose() * g;
                    }
                  });
}

Var relu(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value().cwiseMax(0.0), a.requires_grad(),
                  [a](Tape& tp, std::size_t self) {
                    const Matrix mask =
                        (a.value().array() > 0.0).cast<double>().matrix();
                    accumulate(tp, a, tp.grad(self).cwiseProduct(mask));
                  });
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b, "hadamard");
  require_same_shape(a, b, "hadamard");
  return t.record(a.value().cwiseProduct(b.value()),
                  a.requires_grad() || b.requires_grad(),
                  [a, b](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    accumulate(tp, a, g.cwiseProduct(b.value()));
                    accumulate(tp, b, g.cwiseProduct(a.value()));
                  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = same_tape(a, b, "concat_cols");
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: row counts differ (" +
                     shape_str(a.value()) + " vs " + shape_str(b.value()) +
                     ")");
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const Eigen::Index split = a.cols();
  return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                  [a, b, split](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    accumulate(tp, a, g.leftCols(split));
                    accumulate(tp, b, g.rightCols(g.cols() - split));
                  });
}

Var softmax_rows(Var a) {
  Tape& t = *a.tape();
  Matrix out = prg::softmax_rows(a.value());
  return t.record(std::move(out), a.requires_grad(),
                  [a](Tape& tp, std::size_t self) {
                    const Matrix& y = tp.value(self);
                    const Matrix& g = tp.grad(self);
                    const Vector dot = g.cwiseProduct(y).rowwise().sum();
                    Matrix ga = g;
                    ga.colwise() -= dot;
                    accumulate(tp, a, ga.cwiseProduct(y));
                  });
}

Var log_softmax_rows(Var a) {
  Tape& t = *a.tape();
  Matrix out = prg::log_softmax_rows(a.value());
  return t.record(std::move(out), a.requires_grad(),
                  [a](Tape& tp, std::size_t self) {
                    const Matrix p = tp.value(self).array().exp().matrix();
                    const Matrix& g = tp.grad(self);
                    const Vector gsum = g.rowwise().sum();
                    Matrix ga = g;
                    ga -= gsum.asDiagonal() * p;
                    accumulate(tp, a, ga);
                  });
}

Var standardize_rows(Var a) {
  Tape& t = *a.tape();
  const Matrix centered = center_rows(a.value());
  const double n = static_cast<double>(a.cols());
  Vector sigma = (centered.rowwise().squaredNorm() / n).array() + 1e-12;
  sigma = sigma.array().sqrt();
  Matrix out = sigma.cwiseInverse().asDiagonal() * centered;
  return t.record(std::move(out), a.requires_grad(),
                  [a, sigma, n](Tape& tp, std::size_t self) {
                    const Matrix& y = tp.value(self);
                    const Matrix& g = tp.grad(self);
                    const Vector g_mean = g.rowwise().sum() / n;
                    const Vector gy_mean =
                        g.cwiseProduct(y).rowwise().sum() / n;
                    Matrix ga = g;
                    ga.colwise() -= g_mean;
                    ga -= gy_mean.asDiagonal() * y;
                    accumulate(tp, a, sigma.cwiseInverse().asDiagonal() * ga);
                  });
}

Var pcc_matrix(Var a, Var b) {
  Tape& t = same_tape(a, b, "pcc_matrix");
  auto parts = pcc_parts(a.value(), b.value());
  Matrix out = parts.value;
  return t.record(
      std::move(out), a.requires_grad() || b.requires_grad(),
      [a, b, parts = std::move(parts)](Tape& tp, std::size_t self) {
        Matrix ga, gb;
        const bool need_a = tp.requires_grad(a.id());
        const bool need_b = tp.requires_grad(b.id());
        pcc_backward(parts, tp.grad(self), need_a ? &ga : nullptr,
                     need_b ? &gb : nullptr);
        if (need_a) tp.grad_mut(a.id()) += ga;
        if (need_b) tp.grad_mut(b.id()) += gb;
      });
}

Var reshape_slice(Var a, Eigen::Index offset, Eigen::Index rows,
                  Eigen::Index cols) {
  if (offset < 0 || rows < 0 || cols < 0 ||
      offset + rows * cols > a.value().size()) {
    throw ShapeError("reshape_slice: block out of range for " +
                     shape_str(a.value()));
  }
  Matrix out(rows, cols);
  std::copy(a.value().data() + offset,
            a.value().data() + offset + rows * cols, out.data());
  Tape& t = *a.tape();
  return t.record(std::move(out), a.requires_grad(),
                  [a, offset](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    double* dst = tp.grad_mut(a.id()).data() + offset;
                    for (Eigen::Index i = 0; i < g.size(); ++i) {
                      dst[i] += g.data()[i];
                    }
                  });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record(std::move(out), a.requires_grad(),
                  [a](Tape& tp, std::size_t self) {
                    const double g = tp.grad(self)(0, 0);
                    tp.grad_mut(a.id()).array() += g;
                  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw ShapeError("mean of an empty matrix");
  return scale(sum(a), 1.0 / n);
}

Var square(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value().cwiseAbs2(), a.requires_grad(),
                  [a](Tape& tp, std::size_t self) {
                    accumulate(tp, a,
                               2.0 * tp.grad(self).cwiseProduct(a.value()));
                  });
}

Var frobenius_norm(Var a) {
  Tape& t = *a.tape();
  Matrix out(1, 1);
  out(0, 0) = a.value().norm();
  return t.record(std::move(out), a.requires_grad(),
                  [a](Tape& tp, std::size_t self) {
                    const double nrm = tp.value(self)(0, 0);
                    if (nrm == 0.0) return;
                    accumulate(tp, a,
                               (tp.grad(self)(0, 0) / nrm) * a.value());
                  });
}

}  // namespace ad
}  // namespace prg
