//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MCSRET_AUTODIFF_H_
#define MCSRET_AUTODIFF_H_

#include <deque>
#include <limits>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mcsret {

using Matrix = Eigen::MatrixXd;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tape;

// Handle to a node of a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape *tape, int id) : tape_(tape), id_(id) {}

  const Matrix &value() const;
  // Gradient accumulator; zero-sized until backward() reaches this node.
  const Matrix &grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

  Tape *tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape *tape_ = nullptr;
  int id_ = -1;
};

// Record of a computation over dense matrices, replayed in reverse by
// backward(). A tape is single-threaded; independent tapes may run
// concurrently.
class Tape {
 public:
  // Called with the node's own id and its accumulated gradient.
  using Backward = std::function<void(Tape &, int self, const Matrix &out_grad)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var constant(Matrix value);
  // Leaf whose gradient is kept across backward() calls.
  Var variable(Matrix value);

  // Requires a 1x1 root. Leaf gradients accumulate across calls; interior
  // gradients are recomputed each time.
  void backward(Var root);
  void zero_grad();

  // For op implementations.
  Var record(Matrix value, std::vector<int> parents, Backward backward);
  void accumulate(int id, const Matrix &g);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  const Matrix &value(int id) const { return nodes_[id].value; }
  const Matrix &grad(int id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

  // Smallest nonzero distance of any relu, minimum or max input from its
  // switching point seen so far; infinity if none.
  double kink_margin() const { return kink_margin_; }
  void note_kink_margin(double m);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool needs_grad = false;
    bool leaf = false;
  };
  std::deque<Node> nodes_;  // stable references across record()
  double kink_margin_ = std::numeric_limits<double>::infinity();
};

inline const Matrix &Var::value() const { return tape_->value(id_); }
inline const Matrix &Var::grad() const { return tape_->grad(id_); }

namespace ad {

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var divide(Var a, Var b);
Var scale(Var a, double s);
Var add_constant(Var a, double c);
// Broadcast a 1x1 Var over every entry of a.
Var add_scalar(Var a, Var s);
Var mul_scalar(Var a, Var s);
Var div_scalar(Var a, Var s);

Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var sqrt(Var a);

// Elementwise min with the subgradient of a - relu(a - b): ties route to a.
Var minimum(Var a, Var b);

// Divide each row (column) by its sum.
Var row_normalize(Var a);
Var col_normalize(Var a);

Var sum_all(Var a);
Var row_sum(Var a);  // rows x 1
Var col_sum(Var a);  // 1 x cols
// Per-row maximum over columns (rows x 1); ties route to the first index.
Var max_over_columns(Var a);
Var max_all(Var a);
Var l1_norm_per_column(Var a);  // 1 x cols

Var concat_cols(Var a, Var b);
Var concat_rows(Var a, Var b);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);

// x W + 1 b for row-vector bias b.
Var linear(Var x, Var w, Var b);

}  // namespace ad

using TensorFunction = std::function<Var(Tape &, const std::vector<Var> &)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
  // Tape::kink_margin() of the unperturbed evaluation.
  double kink_margin = 0.0;
};

// Central differences on every input entry against reverse-mode gradients.
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheckResult grad_check(const TensorFunction &f, const std::vector<Matrix> &inputs,
                           double eps = 1e-5, double floor = 1e-2);

}  // namespace mcsret

#endif  // MCSRET_AUTODIFF_H_
