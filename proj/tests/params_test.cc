//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "mcsret/params.h"

namespace mcsret {
namespace {

TEST(AdamTest, FirstStepMovesByLr) {
  ParameterStore s;
  s.add("theta", "x", Matrix::Constant(1, 1, 0.0));
  AdamConfig cfg;
  cfg.weight_decay = 0;
  Adam adam(cfg);
  Gradients g{{Matrix::Constant(1, 1, 1.0)}};
  adam.step(s, g);
  // m = 0.1, v = 0.001; bias-corrected m/sqrt(v) = 1.
  const double m_hat = (1 - cfg.beta1) / (1 - cfg.beta1);
  const double v_hat = (1 - cfg.beta2) / (1 - cfg.beta2);
  const double expect = -cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  EXPECT_NEAR(s.value("theta/x")(0, 0), expect, 1e-15);
  EXPECT_NEAR(s.value("theta/x")(0, 0), -1e-3, 1e-10);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(AdamTest, WeightDecayJoinsGradient) {
  ParameterStore a, b;
  a.add("theta", "x", Matrix::Constant(1, 1, 2.0));
  b.add("theta", "x", Matrix::Constant(1, 1, 2.0));
  AdamConfig with;
  with.weight_decay = 0.5;
  AdamConfig without;
  without.weight_decay = 0;
  Adam(with).step(a, Gradients{{Matrix::Constant(1, 1, 0.0)}});
  Adam(without).step(b, Gradients{{Matrix::Constant(1, 1, 1.0)}});
  EXPECT_DOUBLE_EQ(a.value("theta/x")(0, 0), b.value("theta/x")(0, 0));
}

TEST(AdamTest, WeightGroupClamped) {
  ParameterStore s;
  s.add("w", "layer", Matrix::Constant(1, 2, 0.0005));
  s.add("theta", "x", Matrix::Constant(1, 1, 0.0005));
  Adam adam;
  adam.step(s, Gradients{{Matrix::Constant(1, 2, 1.0), Matrix::Constant(1, 1, 1.0)}});
  EXPECT_EQ(s.value("w/layer").minCoeff(), 0.0);
  EXPECT_LT(s.value("theta/x")(0, 0), 0.0);
}

TEST(CheckpointTest, ExactRoundTrip) {
  std::mt19937_64 rng(4);
  ParameterStore s;
  s.add("theta", "a", uniform_init(3, 4, 3, rng));
  s.add("phi", "b", Matrix::Constant(1, 1, 1.0 / 3));
  s.add("w", "c", Matrix::Constant(1, 5, 1e-300));
  s.meta()["model"] = "lmces";
  s.meta()["lambda"] = "0.7";
  ParameterStore back = ParameterStore::deserialize(s.serialize());
  EXPECT_TRUE(back == s);
  EXPECT_EQ(back.value("theta/a"), s.value("theta/a"));
  auto path = std::filesystem::temp_directory_path() / "mcsret_ckpt_test.txt";
  s.save(path.string());
  EXPECT_TRUE(ParameterStore::load(path.string()) == s);
  std::filesystem::remove(path);
}

TEST(CheckpointTest, RejectsCorruption) {
  ParameterStore s;
  s.add("theta", "a", Matrix::Ones(2, 2));
  std::string text = s.serialize();
  EXPECT_THROW(ParameterStore::deserialize("not a checkpoint\n"), CheckpointError);
  EXPECT_THROW(ParameterStore::deserialize(text.substr(0, text.size() / 2)), CheckpointError);
}

TEST(ParameterStoreTest, DuplicateAndMissing) {
  ParameterStore s;
  s.add("theta", "a", Matrix::Ones(1, 1));
  EXPECT_THROW(s.add("theta", "a", Matrix::Ones(1, 1)), std::invalid_argument);
  EXPECT_THROW(s.index("theta/b"), std::out_of_range);
  EXPECT_TRUE(s.contains("theta/a"));
}

TEST(UniformInitTest, Bounds) {
  std::mt19937_64 rng(5);
  Matrix m = uniform_init(20, 30, 16, rng);
  EXPECT_LE(m.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_GT(m.cwiseAbs().maxCoeff(), 0.2);
}

TEST(BindingTest, GradientsFollowStoreOrder) {
  ParameterStore s;
  s.add("theta", "a", Matrix::Constant(1, 2, 2.0));
  s.add("phi", "b", Matrix::Constant(1, 1, 3.0));
  s.add("w", "unused", Matrix::Constant(1, 1, 1.0));
  Tape t;
  Binding b(t, s);
  t.backward(ad::sum_all(ad::mul_scalar(b["theta/a"], b["phi/b"])));
  Gradients g = b.gradients();
  ASSERT_EQ(g.values.size(), 3u);
  EXPECT_EQ(g.values[0], Matrix::Constant(1, 2, 3.0));
  EXPECT_EQ(g.values[1](0, 0), 4.0);
  EXPECT_EQ(g.values[2](0, 0), 0.0);
  EXPECT_DOUBLE_EQ(g.squared_norm(), 9 + 9 + 16);
}

}  // namespace
}  // namespace mcsret
