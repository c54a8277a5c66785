//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mcsret/autodiff.h"

#include <algorithm>
#include <cmath>

namespace mcsret {

namespace {

// Exact zeros are skipped: they come from padding or identical inputs and
// stay exact under perturbation.
template <typename Expr>
double nonzero_min_abs(const Expr &x) {
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double v = std::abs(x(i));
    if (v > 0 && v < m) m = v;
  }
  return m;
}

std::string shape_of(const Matrix &m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const char *op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_of(a.value()) + " vs " +
                     shape_of(b.value()));
  }
}

void require_scalar(const char *op, Var s) {
  if (s.rows() != 1 || s.cols() != 1) {
    throw ShapeError(std::string(op) + ": expected 1x1 scalar, got " + shape_of(s.value()));
  }
}

void require_same_tape(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("operands live on different tapes");
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  n.leaf = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::vector<int> parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = std::any_of(parents.begin(), parents.end(),
                             [this](int p) { return nodes_[p].needs_grad; });
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(int id, const Matrix &g) {
  Node &n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw std::invalid_argument("backward: root from another tape");
  if (root.rows() != 1 || root.cols() != 1) {
    throw ShapeError("backward: root must be 1x1, got " + shape_of(root.value()));
  }
  for (Node &n : nodes_) {
    if (!n.leaf) n.grad.resize(0, 0);
  }
  accumulate(root.id(), Matrix::Ones(1, 1));
  for (int id = root.id(); id >= 0; --id) {
    Node &n = nodes_[id];
    if (n.leaf || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, id, n.grad);
  }
}

void Tape::note_kink_margin(double m) { kink_margin_ = std::min(kink_margin_, m); }

void Tape::zero_grad() {
  for (Node &n : nodes_) n.grad.resize(0, 0);
}

namespace ad {

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + shape_of(a.value()) + " vs " +
                     shape_of(b.value()));
  }
  int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() * b.value(), {ia, ib}, [ia, ib](Tape &t, int, const Matrix &g) {
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.needs_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var transpose(Var a) {
  int ia = a.id();
  return a.tape()->record(a.value().transpose(), {ia}, [ia](Tape &t, int, const Matrix &g) {
    t.accumulate(ia, g.transpose());
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("add", a, b);
  int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() + b.value(), {ia, ib}, [ia, ib](Tape &t, int, const Matrix &g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("sub", a, b);
  int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() - b.value(), {ia, ib}, [ia, ib](Tape &t, int, const Matrix &g) {
    t.accumulate(ia, g);
    if (t.needs_grad(ib)) t.accumulate(ib, -g);
  });
}

Var hadamard(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("hadamard", a, b);
  int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value().cwiseProduct(b.value()), {ia, ib},
                          [ia, ib](Tape &t, int, const Matrix &g) {
                            if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
                            if (t.needs_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
                          });
}

Var divide(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("divide", a, b);
  int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value().cwiseQuotient(b.value()), {ia, ib},
                          [ia, ib](Tape &t, int, const Matrix &g) {
                            const Matrix &bv = t.value(ib);
                            if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseQuotient(bv));
                            if (t.needs_grad(ib)) {
                              Matrix gb = -(g.cwiseProduct(t.value(ia)))
                                               .cwiseQuotient(bv.cwiseProduct(bv));
                              t.accumulate(ib, gb);
                            }
                          });
}

Var scale(Var a, double s) {
  int ia = a.id();
  return a.tape()->record(a.value() * s, {ia},
                          [ia, s](Tape &t, int, const Matrix &g) { t.accumulate(ia, g * s); });
}

Var add_constant(Var a, double c) {
  int ia = a.id();
  Matrix v = a.value().array() + c;
  return a.tape()->record(std::move(v), {ia},
                          [ia](Tape &t, int, const Matrix &g) { t.accumulate(ia, g); });
}

Var add_scalar(Var a, Var s) {
  require_same_tape(a, s);
  require_scalar("add_scalar", s);
  int ia = a.id(), is = s.id();
  Matrix v = a.value().array() + s.scalar();
  return a.tape()->record(std::move(v), {ia, is}, [ia, is](Tape &t, int, const Matrix &g) {
    t.accumulate(ia, g);
    if (t.needs_grad(is)) t.accumulate(is, Matrix::Constant(1, 1, g.sum()));
  });
}

Var mul_scalar(Var a, Var s) {
  require_same_tape(a, s);
  require_scalar("mul_scalar", s);
  int ia = a.id(), is = s.id();
  return a.tape()->record(a.value() * s.scalar(), {ia, is}, [ia, is](Tape &t, int, const Matrix &g) {
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(is)(0, 0));
    if (t.needs_grad(is)) {
      t.accumulate(is, Matrix::Constant(1, 1, g.cwiseProduct(t.value(ia)).sum()));
    }
  });
}

Var div_scalar(Var a, Var s) {
  require_same_tape(a, s);
  require_scalar("div_scalar", s);
  int ia = a.id(), is = s.id();
  return a.tape()->record(a.value() / s.scalar(), {ia, is}, [ia, is](Tape &t, int, const Matrix &g) {
    double sv = t.value(is)(0, 0);
    if (t.needs_grad(ia)) t.accumulate(ia, g / sv);
    if (t.needs_grad(is)) {
      double d = -g.cwiseProduct(t.value(ia)).sum() / (sv * sv);
      t.accumulate(is, Matrix::Constant(1, 1, d));
    }
  });
}

Var relu(Var a) {
  int ia = a.id();
  a.tape()->note_kink_margin(nonzero_min_abs(a.value().array()));
  Matrix v = a.value().cwiseMax(0.0);
  return a.tape()->record(std::move(v), {ia}, [ia](Tape &t, int, const Matrix &g) {
    Matrix mask = (t.value(ia).array() > 0.0).cast<double>();
    t.accumulate(ia, g.cwiseProduct(mask));
  });
}

Var sigmoid(Var a) {
  int ia = a.id();
  Matrix v = a.value().unaryExpr(&stable_sigmoid);
  return a.tape()->record(std::move(v), {ia}, [ia](Tape &t, int self, const Matrix &g) {
    const Matrix &y = t.value(self);
    t.accumulate(ia, g.cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  });
}

Var tanh(Var a) {
  int ia = a.id();
  Matrix v = a.value().array().tanh();
  return a.tape()->record(std::move(v), {ia}, [ia](Tape &t, int self, const Matrix &g) {
    const Matrix &y = t.value(self);
    t.accumulate(ia, g.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var exp(Var a) {
  int ia = a.id();
  Matrix v = a.value().array().exp();
  return a.tape()->record(std::move(v), {ia}, [ia](Tape &t, int self, const Matrix &g) {
    t.accumulate(ia, g.cwiseProduct(t.value(self)));
  });
}

Var sqrt(Var a) {
  int ia = a.id();
  Matrix v = a.value().array().sqrt();
  return a.tape()->record(std::move(v), {ia}, [ia](Tape &t, int self, const Matrix &g) {
    t.accumulate(ia, (g.array() / (2.0 * t.value(self).array())).matrix());
  });
}

// Forward uses the exact elementwise min so that a - min(a, b) and
// relu(a - b) agree bit for bit; the gradient is that of a - relu(a - b).
Var minimum(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("minimum", a, b);
  int ia = a.id(), ib = b.id();
  a.tape()->note_kink_margin(nonzero_min_abs(a.value().array() - b.value().array()));
  return a.tape()->record(a.value().cwiseMin(b.value()), {ia, ib},
                          [ia, ib](Tape &t, int, const Matrix &g) {
                            Matrix to_a = (t.value(ia).array() <= t.value(ib).array()).cast<double>();
                            if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseProduct(to_a));
                            if (t.needs_grad(ib)) {
                              t.accumulate(ib, g.cwiseProduct((1.0 - to_a.array()).matrix()));
                            }
                          });
}

Var row_normalize(Var a) {
  int ia = a.id();
  Eigen::VectorXd sums = a.value().rowwise().sum();
  Matrix v = a.value().array().colwise() / sums.array();
  return a.tape()->record(std::move(v), {ia}, [ia](Tape &t, int self, const Matrix &g) {
    // y = x / s(row); dx = (g - <g, y>_row) / s(row)
    const Matrix &y = t.value(self);
    Eigen::VectorXd sums = t.value(ia).rowwise().sum();
    Eigen::VectorXd inner = g.cwiseProduct(y).rowwise().sum();
    Matrix dx = (g.colwise() - inner).array().colwise() / sums.array();
    t.accumulate(ia, dx);
  });
}

Var col_normalize(Var a) {
  int ia = a.id();
  Eigen::RowVectorXd sums = a.value().colwise().sum();
  Matrix v = a.value().array().rowwise() / sums.array();
  return a.tape()->record(std::move(v), {ia}, [ia](Tape &t, int self, const Matrix &g) {
    const Matrix &y = t.value(self);
    Eigen::RowVectorXd sums = t.value(ia).colwise().sum();
    Eigen::RowVectorXd inner = g.cwiseProduct(y).colwise().sum();
    Matrix dx = (g.rowwise() - inner).array().rowwise() / sums.array();
    t.accumulate(ia, dx);
  });
}

Var sum_all(Var a) {
  int ia = a.id();
  Eigen::Index r = a.rows(), c = a.cols();
  return a.tape()->record(Matrix::Constant(1, 1, a.value().sum()), {ia},
                          [ia, r, c](Tape &t, int, const Matrix &g) {
                            t.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
                          });
}

Var row_sum(Var a) {
  int ia = a.id();
  Eigen::Index c = a.cols();
  return a.tape()->record(a.value().rowwise().sum(), {ia}, [ia, c](Tape &t, int, const Matrix &g) {
    t.accumulate(ia, g.replicate(1, c));
  });
}

Var col_sum(Var a) {
  int ia = a.id();
  Eigen::Index r = a.rows();
  return a.tape()->record(a.value().colwise().sum(), {ia}, [ia, r](Tape &t, int, const Matrix &g) {
    t.accumulate(ia, g.replicate(r, 1));
  });
}

Var max_over_columns(Var a) {
  if (a.cols() == 0) throw ShapeError("max_over_columns: no columns");
  int ia = a.id();
  const Matrix &x = a.value();
  std::vector<Eigen::Index> arg(x.rows());
  Matrix v(x.rows(), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index j = 0;
    v(i, 0) = x.row(i).maxCoeff(&j);
    arg[i] = j;
    a.tape()->note_kink_margin(nonzero_min_abs(v(i, 0) - x.row(i).array()));
  }
  Eigen::Index r = x.rows(), c = x.cols();
  return a.tape()->record(std::move(v), {ia},
                          [ia, arg = std::move(arg), r, c](Tape &t, int, const Matrix &g) {
                            Matrix dx = Matrix::Zero(r, c);
                            for (Eigen::Index i = 0; i < r; ++i) dx(i, arg[i]) = g(i, 0);
                            t.accumulate(ia, dx);
                          });
}

Var max_all(Var a) {
  if (a.value().size() == 0) throw ShapeError("max_all: empty matrix");
  int ia = a.id();
  Eigen::Index i = 0, j = 0;
  double m = a.value().maxCoeff(&i, &j);
  a.tape()->note_kink_margin(nonzero_min_abs(m - a.value().array()));
  Eigen::Index r = a.rows(), c = a.cols();
  return a.tape()->record(Matrix::Constant(1, 1, m), {ia},
                          [ia, i, j, r, c](Tape &t, int, const Matrix &g) {
                            Matrix dx = Matrix::Zero(r, c);
                            dx(i, j) = g(0, 0);
                            t.accumulate(ia, dx);
                          });
}

Var l1_norm_per_column(Var a) {
  int ia = a.id();
  Eigen::Index r = a.rows();
  return a.tape()->record(a.value().cwiseAbs().colwise().sum(), {ia},
                          [ia, r](Tape &t, int, const Matrix &g) {
                            Matrix sign = t.value(ia).unaryExpr(
                                [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
                            t.accumulate(ia, sign.cwiseProduct(g.replicate(r, 1)));
                          });
}

Var concat_cols(Var a, Var b) {
  require_same_tape(a, b);
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: row counts differ " + shape_of(a.value()) + " vs " +
                     shape_of(b.value()));
  }
  Matrix v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  int ia = a.id(), ib = b.id();
  Eigen::Index ca = a.cols(), cb = b.cols();
  return a.tape()->record(std::move(v), {ia, ib}, [ia, ib, ca, cb](Tape &t, int, const Matrix &g) {
    if (t.needs_grad(ia)) t.accumulate(ia, g.leftCols(ca));
    if (t.needs_grad(ib)) t.accumulate(ib, g.rightCols(cb));
  });
}

Var concat_rows(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.cols()) {
    throw ShapeError("concat_rows: column counts differ " + shape_of(a.value()) + " vs " +
                     shape_of(b.value()));
  }
  Matrix v(a.rows() + b.rows(), a.cols());
  v << a.value(), b.value();
  int ia = a.id(), ib = b.id();
  Eigen::Index ra = a.rows(), rb = b.rows();
  return a.tape()->record(std::move(v), {ia, ib}, [ia, ib, ra, rb](Tape &t, int, const Matrix &g) {
    if (t.needs_grad(ia)) t.accumulate(ia, g.topRows(ra));
    if (t.needs_grad(ib)) t.accumulate(ib, g.bottomRows(rb));
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw ShapeError("slice_rows: [" + std::to_string(start) + ", +" + std::to_string(count) +
                     ") out of range for " + shape_of(a.value()));
  }
  int ia = a.id();
  Eigen::Index r = a.rows(), c = a.cols();
  return a.tape()->record(a.value().middleRows(start, count), {ia},
                          [ia, start, count, r, c](Tape &t, int, const Matrix &g) {
                            Matrix dx = Matrix::Zero(r, c);
                            dx.middleRows(start, count) = g;
                            t.accumulate(ia, dx);
                          });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) +
                     ") out of range for " + shape_of(a.value()));
  }
  int ia = a.id();
  Eigen::Index r = a.rows(), c = a.cols();
  return a.tape()->record(a.value().middleCols(start, count), {ia},
                          [ia, start, count, r, c](Tape &t, int, const Matrix &g) {
                            Matrix dx = Matrix::Zero(r, c);
                            dx.middleCols(start, count) = g;
                            t.accumulate(ia, dx);
                          });
}

Var linear(Var x, Var w, Var b) {
  if (b.rows() != 1 || b.cols() != w.cols()) {
    throw ShapeError("linear: bias " + shape_of(b.value()) + " does not match weight " +
                     shape_of(w.value()));
  }
  Var ones = x.tape()->constant(Matrix::Ones(x.rows(), 1));
  return add(matmul(x, w), matmul(ones, b));
}

}  // namespace ad

GradCheckResult grad_check(const TensorFunction &f, const std::vector<Matrix> &inputs, double eps,
                           double floor) {
  GradCheckResult result;
  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix &m : inputs) vars.push_back(tape.variable(m));
    Var out = f(tape, vars);
    result.kink_margin = tape.kink_margin();
    tape.backward(out);
    for (std::size_t k = 0; k < vars.size(); ++k) {
      Matrix g = vars[k].grad();
      if (g.size() == 0) g = Matrix::Zero(inputs[k].rows(), inputs[k].cols());
      analytic.push_back(std::move(g));
    }
  }
  auto evaluate = [&](const std::vector<Matrix> &xs) {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix &m : xs) vars.push_back(tape.constant(m));
    return f(tape, vars).scalar();
  };
  std::vector<Matrix> xs = inputs;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    for (Eigen::Index i = 0; i < xs[k].size(); ++i) {
      double orig = xs[k](i);
      xs[k](i) = orig + eps;
      double up = evaluate(xs);
      xs[k](i) = orig - eps;
      double down = evaluate(xs);
      xs[k](i) = orig;
      double numeric = (up - down) / (2.0 * eps);
      double a = analytic[k](i);
      double denom = std::max({std::abs(a), std::abs(numeric), floor});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / denom);
      ++result.checked;
    }
  }
  return result;
}

}  // namespace mcsret
