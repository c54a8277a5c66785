//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MCSRET_PARAMS_H_
#define MCSRET_PARAMS_H_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mcsret/autodiff.h"

namespace mcsret {

// Parameter groups.
inline constexpr const char *kEncoderGroup = "theta";
inline constexpr const char *kAlignGroup = "phi";
inline constexpr const char *kEdgeScorerGroup = "alpha";
inline constexpr const char *kThresholdGroup = "beta";
inline constexpr const char *kWeightGroup = "w";  // kept non-negative

struct Parameter {
  std::string group;
  std::string name;
  Matrix value;

  std::string key() const { return group + "/" + name; }
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Named trainable tensors in insertion order, plus string metadata that
// travels with checkpoints.
class ParameterStore {
 public:
  Parameter &add(const std::string &group, const std::string &name, Matrix init);

  const std::vector<Parameter> &params() const { return params_; }
  std::vector<Parameter> &params() { return params_; }
  std::size_t size() const { return params_.size(); }

  // Index by "group/name"; throws std::out_of_range when missing.
  std::size_t index(const std::string &key) const;
  const Matrix &value(const std::string &key) const { return params_[index(key)].value; }
  Matrix &value(const std::string &key) { return params_[index(key)].value; }
  bool contains(const std::string &key) const { return by_key_.count(key) > 0; }

  std::map<std::string, std::string> &meta() { return meta_; }
  const std::map<std::string, std::string> &meta() const { return meta_; }

  std::string serialize() const;
  static ParameterStore deserialize(const std::string &text);
  void save(const std::string &path) const;
  static ParameterStore load(const std::string &path);

  friend bool operator==(const ParameterStore &a, const ParameterStore &b);

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> by_key_;
  std::map<std::string, std::string> meta_;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Matrix uniform_init(int rows, int cols, int fan_in, std::mt19937_64 &rng);

// One gradient per store entry, same order and shapes.
struct Gradients {
  std::vector<Matrix> values;

  static Gradients zeros_like(const ParameterStore &store);
  void add(const Gradients &other);
  double squared_norm() const;
};

// Every parameter of a store placed on a tape as a leaf variable.
class Binding {
 public:
  Binding(Tape &tape, const ParameterStore &store);
  // Reuses existing vars, one per store entry.
  Binding(const ParameterStore &store, std::vector<Var> vars);
  const ParameterStore &store() const { return *store_; }
  const std::vector<Var> &vars() const { return vars_; }
  Var operator[](const std::string &key) const;
  Gradients gradients() const;

 private:
  const ParameterStore *store_;
  std::vector<Var> vars_;
};

// Parameters as constants, for forward-only evaluation.
Binding constant_binding(Tape &tape, const ParameterStore &store);

struct AdamConfig {
  double lr = 1e-3;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with L2 weight decay folded into the gradient. Parameters of group
// "w" are clamped at zero after every step.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}
  void step(ParameterStore &store, const Gradients &grads);
  int steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_, v_;
  int t_ = 0;
};

}  // namespace mcsret

#endif  // MCSRET_PARAMS_H_
