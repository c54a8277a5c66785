//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mcsret/encoder.h"
#include "mcsret/verify.h"

namespace mcsret {
namespace {

ParameterStore encoder_store(const EncoderConfig &cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParameterStore s;
  add_encoder_params(s, cfg, rng);
  // Nonzero biases so that every term is exercised.
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (const char *k : {"theta/gru_bi", "theta/gru_bh"}) {
    Matrix &m = s.value(k);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  }
  return s;
}

double sig(double x) { return 1 / (1 + std::exp(-x)); }

// One propagation step written as a loop over nodes and neighbours.
Matrix reference_step(const ParameterStore &s, const Graph &g, int n, const Matrix &h,
                      const Matrix &cross) {
  const int d = static_cast<int>(h.cols());
  const Matrix &w = s.value("theta/msg_w");
  const Matrix &b = s.value("theta/msg_b");
  const int de = static_cast<int>(w.cols());
  Matrix agg = Matrix::Zero(n, de + cross.cols());
  for (auto [a, c] : g.edges()) {
    for (auto [v, u] : {std::pair{a, c}, std::pair{c, a}}) {
      // Message from v into u on the concatenation [h_v; h_u].
      Eigen::RowVectorXd cat(2 * d);
      cat << h.row(v), h.row(u);
      agg.row(u).head(de) += cat * w + b;
    }
  }
  if (cross.cols()) agg.col(de) = cross;
  const Matrix &wi = s.value("theta/gru_wi"), &wh = s.value("theta/gru_wh");
  const Matrix &bi = s.value("theta/gru_bi"), &bh = s.value("theta/gru_bh");
  Matrix out(n, d);
  for (int u = 0; u < n; ++u) {
    Eigen::RowVectorXd gi = agg.row(u) * wi + bi, gh = h.row(u) * wh + bh;
    for (int k = 0; k < d; ++k) {
      double r = sig(gi(k) + gh(k));
      double z = sig(gi(d + k) + gh(d + k));
      double cand = std::tanh(gi(2 * d + k) + r * gh(2 * d + k));
      out(u, k) = (1 - z) * cand + z * h(u, k);
    }
  }
  return out;
}

TEST(EncoderTest, FeaturesIdenticalRows) {
  EncoderConfig cfg;
  ParameterStore s = encoder_store(cfg, 1);
  Tape t;
  Matrix h0 = encode_features(t, Binding(t, s), cfg, 7).value();
  for (int i = 1; i < 7; ++i) EXPECT_EQ(Matrix(h0.row(i)), Matrix(h0.row(0)));
  EXPECT_EQ(Matrix(h0.row(0)), Matrix(s.value("theta/feat_w").row(0) + s.value("theta/feat_b")));
}

TEST(EncoderTest, ZeroWeightsZeroFeatures) {
  EncoderConfig cfg;
  ParameterStore s = encoder_store(cfg, 1);
  s.value("theta/feat_w").setZero();
  s.value("theta/feat_b").setZero();
  Tape t;
  EXPECT_EQ(encode_features(t, Binding(t, s), cfg, 4).value(), Matrix::Zero(4, cfg.node_dim));
}

TEST(EncoderTest, FeatureGradientIsNodeCount) {
  EncoderConfig cfg;
  ParameterStore s = encoder_store(cfg, 2);
  const int n = 6;
  GradCheckResult fd = grad_check_params(s, [&](Tape &t, const Binding &b) {
    return ad::sum_all(encode_features(t, b, cfg, n));
  });
  EXPECT_LT(fd.max_rel_error, 1e-8);
  Tape t;
  Binding b(t, s);
  t.backward(ad::sum_all(encode_features(t, b, cfg, n)));
  EXPECT_EQ(b["theta/feat_w"].grad(), Matrix::Constant(1, cfg.node_dim, n));
  EXPECT_EQ(b["theta/feat_b"].grad(), Matrix::Constant(1, cfg.node_dim, n));
}

TEST(EncoderTest, PropagateMatchesLoopReference) {
  std::mt19937_64 rng(3);
  for (bool cross : {false, true}) {
    EncoderConfig cfg;
    cfg.cross_input = cross;
    ParameterStore s = encoder_store(cfg, 4);
    for (int trial = 0; trial < 5; ++trial) {
      Graph g = random_graph(6, 0.4, rng);
      const int n = 8;
      Matrix h = Matrix::Random(n, cfg.node_dim);
      Matrix c = cross ? Matrix(Matrix::Random(n, 1)) : Matrix(n, 0);
      Tape t;
      Var cv = cross ? t.constant(c) : Var{};
      Matrix got = propagate(t, Binding(t, s), cfg, make_structure(g, n), t.constant(h), cv).value();
      EXPECT_TRUE(got.isApprox(reference_step(s, g, n, h, c), 1e-12));
    }
  }
}

TEST(EncoderTest, IsolatedNodeSelfUpdateOnly) {
  EncoderConfig cfg;
  ParameterStore s = encoder_store(cfg, 5);
  Graph g("g", 3, {{0, 1}});
  Matrix h = Matrix::Random(3, cfg.node_dim);
  Tape t;
  Matrix got = propagate(t, Binding(t, s), cfg, make_structure(g, 3), t.constant(h)).value();
  Graph alone("a", 1, {});
  Tape t2;
  Matrix solo = propagate(t2, Binding(t2, s), cfg, make_structure(alone, 1),
                          t2.constant(h.row(2))).value();
  EXPECT_TRUE(got.row(2).isApprox(solo.row(0), 1e-14));
}

TEST(EncoderTest, StackHasFeaturesPlusLayers) {
  EncoderConfig cfg;
  ParameterStore s = encoder_store(cfg, 6);
  Graph g("g", 4, {{0, 1}, {1, 2}});
  Tape t;
  EmbeddingStack st = encode_graph(t, Binding(t, s), cfg, make_structure(g, 5), {}, true);
  EXPECT_EQ(static_cast<int>(st.h.size()), cfg.layers + 1);
  EXPECT_EQ(st.edges.rows(), 2 * g.num_edges());
  EXPECT_EQ(st.edges.cols(), cfg.msg_dim);
}

TEST(EncoderTest, EvenPathSymmetry) {
  EncoderConfig cfg;
  ParameterStore s = encoder_store(cfg, 7);
  Graph p("p", 6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}});
  Tape t;
  EmbeddingStack st = encode_graph(t, Binding(t, s), cfg, make_structure(p, 6));
  for (const Var &h : st.h) {
    for (int i = 0; i < 3; ++i) EXPECT_TRUE(h.value().row(i).isApprox(h.value().row(5 - i), 1e-14));
  }
}

TEST(EncoderTest, Equivariance) {
  EncoderConfig cfg;
  ParameterStore s = encoder_store(cfg, 8);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    Graph g = random_graph(7, 0.35, rng);
    std::vector<int> perm = random_permutation(7, rng);
    Tape t;
    Binding b(t, s);
    EmbeddingStack a = encode_graph(t, b, cfg, make_structure(g, 7), {}, true);
    EmbeddingStack c = encode_graph(t, b, cfg, make_structure(g.relabeled(perm), 7), {}, true);
    for (std::size_t r = 0; r < a.h.size(); ++r) {
      for (int u = 0; u < 7; ++u) {
        EXPECT_LT((a.h[r].value().row(u) - c.h[r].value().row(perm[u])).cwiseAbs().maxCoeff(),
                  1e-13);
      }
    }
  }
}

TEST(EncoderTest, ZeroCrossMatchesNoHook) {
  EncoderConfig cfg;
  cfg.cross_input = true;
  ParameterStore s = encoder_store(cfg, 10);
  Graph g("g", 5, {{0, 1}, {1, 2}, {3, 4}});
  Tape t;
  Binding b(t, s);
  auto plain = encode_graph(t, b, cfg, make_structure(g, 5));
  auto zero = encode_graph(t, b, cfg, make_structure(g, 5), [&](int, Var h) {
    return t.constant(Matrix::Zero(h.rows(), 1));
  });
  EXPECT_EQ(plain.h.back().value(), zero.h.back().value());
}

TEST(EncoderTest, Deterministic) {
  EncoderConfig cfg;
  Graph g("g", 5, {{0, 1}, {1, 2}, {3, 4}});
  ParameterStore a = encoder_store(cfg, 11), b = encoder_store(cfg, 11);
  Tape t;
  EXPECT_EQ(encode_graph(t, Binding(t, a), cfg, make_structure(g, 6)).h.back().value(),
            encode_graph(t, Binding(t, b), cfg, make_structure(g, 6)).h.back().value());
}

TEST(EncoderTest, ReadoutGradCheck) {
  EncoderConfig cfg;
  cfg.layers = 3;
  ParameterStore s = encoder_store(cfg, 12);
  Graph g("g", 5, {{0, 1}, {1, 2}, {2, 3}, {1, 4}});
  GradCheckResult r = grad_check_params(s, [&](Tape &t, const Binding &b) {
    EmbeddingStack st = encode_graph(t, b, cfg, make_structure(g, 6), {}, true);
    return ad::add(ad::sum_all(ad::tanh(st.h.back())), ad::sum_all(ad::sigmoid(st.edges)));
  });
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(EncoderTest, SizeErrors) {
  Graph g("g", 5, {});
  EXPECT_THROW(make_structure(g, 4), SizeError);
  EncoderConfig cfg;
  cfg.layers = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

}  // namespace
}  // namespace mcsret
