//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <functional>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "mcsret/autodiff.h"

namespace mcsret {
namespace {

Matrix random_matrix(int r, int c, std::mt19937_64 &rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

TEST(AutodiffTest, MinimumExample) {
  Tape t;
  Var a = t.variable(scalar(3)), b = t.variable(scalar(5));
  Var m = ad::minimum(a, b);
  EXPECT_EQ(m.scalar(), 3);
  t.backward(m);
  EXPECT_EQ(a.grad()(0, 0), 1);
  EXPECT_EQ(b.grad()(0, 0), 0);
}

TEST(AutodiffTest, MinimumTieGoesToFirst) {
  Tape t;
  Var a = t.variable(scalar(2)), b = t.variable(scalar(2));
  t.backward(ad::minimum(a, b));
  EXPECT_EQ(a.grad()(0, 0), 1);
  EXPECT_EQ(b.grad()(0, 0), 0);
}

TEST(AutodiffTest, ReluIndicator) {
  Tape t;
  Matrix x(2, 3);
  x << -1, 2, 0.5, 3, -0.25, -4;
  Var v = t.variable(x);
  t.backward(ad::sum_all(ad::relu(v)));
  Matrix expect = (x.array() > 0).cast<double>();
  EXPECT_EQ(v.grad(), expect);
}

TEST(AutodiffTest, SumGivesOnes) {
  Tape t;
  Var v = t.variable(Matrix::Random(3, 4));
  t.backward(ad::sum_all(v));
  EXPECT_EQ(v.grad(), Matrix::Ones(3, 4));
}

TEST(AutodiffTest, BackwardTwiceAccumulates) {
  Tape t;
  Var v = t.variable(Matrix::Random(2, 2));
  Var out = ad::sum_all(ad::hadamard(v, v));
  t.backward(out);
  Matrix once = v.grad();
  t.backward(out);
  EXPECT_TRUE(v.grad().isApprox(2 * once));
  t.zero_grad();
  t.backward(out);
  EXPECT_TRUE(v.grad().isApprox(once));
}

TEST(AutodiffTest, NonScalarRootThrows) {
  Tape t;
  Var v = t.variable(Matrix::Ones(2, 2));
  EXPECT_THROW(t.backward(v), ShapeError);
}

TEST(AutodiffTest, ShapeErrorNamesBothShapes) {
  Tape t;
  Var a = t.variable(Matrix::Ones(2, 3)), b = t.variable(Matrix::Ones(2, 3));
  try {
    ad::matmul(a, b);
    FAIL();
  } catch (const ShapeError &e) {
    std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos);
    EXPECT_NE(what.find("2x3", what.find("2x3") + 1), std::string::npos);
  }
  EXPECT_THROW(ad::add(a, t.variable(Matrix::Ones(3, 2))), ShapeError);
}

TEST(AutodiffTest, ConstantsGetNoGradient) {
  Tape t;
  Var c = t.constant(Matrix::Ones(2, 2));
  Var v = t.variable(Matrix::Ones(2, 2));
  t.backward(ad::sum_all(ad::hadamard(c, v)));
  EXPECT_EQ(c.grad().size(), 0);
  EXPECT_EQ(v.grad(), Matrix::Ones(2, 2));
}

TEST(AutodiffTest, MatmulGradCheck) {
  std::mt19937_64 rng(1);
  GradCheckResult r = grad_check(
      [](Tape &, const std::vector<Var> &v) { return ad::sum_all(ad::matmul(v[0], v[1])); },
      {random_matrix(3, 4, rng), random_matrix(4, 2, rng)});
  EXPECT_LT(r.max_rel_error, 1e-6);
  EXPECT_EQ(r.checked, 20);
}

TEST(AutodiffTest, QuadraticChainGradCheck) {
  std::mt19937_64 rng(2);
  GradCheckResult r = grad_check(
      [](Tape &, const std::vector<Var> &v) {
        Var xxt = ad::matmul(v[0], ad::transpose(v[0]));
        return ad::sum_all(ad::hadamard(xxt, xxt));
      },
      {random_matrix(3, 3, rng)});
  EXPECT_LT(r.max_rel_error, 1e-6);
}

struct OpCase {
  std::string name;
  std::function<Var(const std::vector<Var> &)> f;
  std::vector<std::pair<int, int>> shapes;
  double lo = -1, hi = 1;
  double tolerance = 1e-6;
};

class OpGradTest : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradTest, MatchesFiniteDifferences) {
  const OpCase &c = GetParam();
  std::mt19937_64 rng(std::hash<std::string>{}(c.name));
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Matrix> in;
    for (auto [r, k] : c.shapes) in.push_back(random_matrix(r, k, rng, c.lo, c.hi));
    // A weighted sum makes every output entry matter differently.
    Matrix weights;
    GradCheckResult res = grad_check(
        [&](Tape &t, const std::vector<Var> &v) {
          Var out = c.f(v);
          if (weights.size() == 0) {
            std::mt19937_64 wr(trial);
            weights = random_matrix(static_cast<int>(out.rows()), static_cast<int>(out.cols()), wr);
          }
          return ad::sum_all(ad::hadamard(out, t.constant(weights)));
        },
        in);
    EXPECT_LT(res.max_rel_error, c.tolerance) << c.name << " trial " << trial;
  }
}

std::vector<OpCase> op_cases() {
  using V = const std::vector<Var> &;
  return {
      {"transpose", [](V v) { return ad::transpose(v[0]); }, {{3, 2}}},
      {"add", [](V v) { return ad::add(v[0], v[1]); }, {{2, 3}, {2, 3}}},
      {"sub", [](V v) { return ad::sub(v[0], v[1]); }, {{2, 3}, {2, 3}}},
      {"hadamard", [](V v) { return ad::hadamard(v[0], v[1]); }, {{2, 3}, {2, 3}}},
      {"divide", [](V v) { return ad::divide(v[0], v[1]); }, {{2, 3}, {2, 3}}, 0.5, 2},
      {"scale", [](V v) { return ad::scale(v[0], -2.5); }, {{2, 2}}},
      {"add_constant", [](V v) { return ad::add_constant(v[0], 4); }, {{2, 2}}},
      {"add_scalar", [](V v) { return ad::add_scalar(v[0], v[1]); }, {{3, 2}, {1, 1}}},
      {"mul_scalar", [](V v) { return ad::mul_scalar(v[0], v[1]); }, {{3, 2}, {1, 1}}},
      {"div_scalar", [](V v) { return ad::div_scalar(v[0], v[1]); }, {{3, 2}, {1, 1}}, 0.5, 2},
      {"sigmoid", [](V v) { return ad::sigmoid(v[0]); }, {{3, 3}}, -4, 4},
      {"tanh", [](V v) { return ad::tanh(v[0]); }, {{3, 3}}, -2, 2},
      {"exp", [](V v) { return ad::exp(v[0]); }, {{3, 3}}},
      {"sqrt", [](V v) { return ad::sqrt(v[0]); }, {{3, 3}}, 0.5, 2},
      {"relu", [](V v) { return ad::relu(v[0]); }, {{4, 4}}, -1, 1, 1e-4},
      {"minimum", [](V v) { return ad::minimum(v[0], v[1]); }, {{3, 3}, {3, 3}}, -1, 1, 1e-4},
      {"row_normalize", [](V v) { return ad::row_normalize(v[0]); }, {{3, 4}}, 0.5, 2},
      {"col_normalize", [](V v) { return ad::col_normalize(v[0]); }, {{3, 4}}, 0.5, 2},
      {"row_sum", [](V v) { return ad::row_sum(v[0]); }, {{3, 4}}},
      {"col_sum", [](V v) { return ad::col_sum(v[0]); }, {{3, 4}}},
      {"max_over_columns", [](V v) { return ad::max_over_columns(v[0]); }, {{3, 5}}, -1, 1, 1e-4},
      {"max_all", [](V v) { return ad::max_all(v[0]); }, {{3, 5}}, -1, 1, 1e-4},
      {"l1_norm_per_column", [](V v) { return ad::l1_norm_per_column(v[0]); }, {{4, 3}}, -1, 1,
       1e-4},
      {"concat_cols", [](V v) { return ad::concat_cols(v[0], v[1]); }, {{2, 3}, {2, 1}}},
      {"concat_rows", [](V v) { return ad::concat_rows(v[0], v[1]); }, {{2, 3}, {1, 3}}},
      {"slice_rows", [](V v) { return ad::slice_rows(v[0], 1, 2); }, {{4, 3}}},
      {"slice_cols", [](V v) { return ad::slice_cols(v[0], 1, 2); }, {{3, 4}}},
      {"linear", [](V v) { return ad::linear(v[0], v[1], v[2]); }, {{4, 3}, {3, 5}, {1, 5}}},
  };
}

INSTANTIATE_TEST_SUITE_P(Ops, OpGradTest, ::testing::ValuesIn(op_cases()),
                         [](const auto &info) { return info.param.name; });

TEST(AutodiffTest, ForwardValues) {
  Tape t;
  Matrix x(2, 2);
  x << 1, 3, 2, 2;
  Var v = t.constant(x);
  Matrix rn(2, 2), cn(2, 2);
  rn << 0.25, 0.75, 0.5, 0.5;
  cn << 1.0 / 3, 0.6, 2.0 / 3, 0.4;
  EXPECT_TRUE(ad::row_normalize(v).value().isApprox(rn));
  EXPECT_TRUE(ad::col_normalize(v).value().isApprox(cn));
  EXPECT_EQ(ad::max_over_columns(v).value(), (Matrix(2, 1) << 3, 2).finished());
  EXPECT_EQ(ad::l1_norm_per_column(ad::scale(v, -1)).value(), (Matrix(1, 2) << 3, 5).finished());
  EXPECT_EQ(ad::max_all(v).scalar(), 3);
}

TEST(AutodiffTest, KinkMarginTracksClosestSwitch) {
  Tape t;
  Matrix x(1, 3);
  x << 0.3, -0.02, 0.0;
  ad::relu(t.constant(x));
  EXPECT_DOUBLE_EQ(t.kink_margin(), 0.02);
  Matrix a(1, 2), b(1, 2);
  a << 1.0, 2.0;
  b << 1.005, 2.0;
  ad::minimum(t.constant(a), t.constant(b));
  EXPECT_NEAR(t.kink_margin(), 0.005, 1e-15);
}

}  // namespace
}  // namespace mcsret
