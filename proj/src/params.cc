//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mcsret/params.h"

#include <charconv>
#include <cmath>
#include <sstream>

#include "mcsret/graph.h"

namespace mcsret {

namespace {

constexpr const char *kMagic = "mcsret-checkpoint";
constexpr int kVersion = 1;

}  // namespace

Parameter &ParameterStore::add(const std::string &group, const std::string &name, Matrix init) {
  Parameter p{group, name, std::move(init)};
  std::string key = p.key();
  if (by_key_.count(key)) throw std::invalid_argument("duplicate parameter " + key);
  by_key_[key] = params_.size();
  params_.push_back(std::move(p));
  return params_.back();
}

std::size_t ParameterStore::index(const std::string &key) const {
  auto it = by_key_.find(key);
  if (it == by_key_.end()) throw std::out_of_range("no parameter " + key);
  return it->second;
}

// Text container: header line, `meta` lines, then per parameter a
// `param key rows cols` line followed by one line of row-major values in
// shortest round-trip form.
std::string ParameterStore::serialize() const {
  std::ostringstream out;
  out << kMagic << ' ' << kVersion << '\n';
  for (const auto &[k, v] : meta_) out << "meta " << k << ' ' << v << '\n';
  for (const Parameter &p : params_) {
    out << "param " << p.key() << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
        if (i || j) out << ' ';
        out << format_double(p.value(i, j));
      }
    }
    out << '\n';
  }
  out << "end\n";
  return out.str();
}

ParameterStore ParameterStore::deserialize(const std::string &text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw CheckpointError("not a checkpoint");
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  ParameterStore store;
  std::string tag;
  while (in >> tag) {
    if (tag == "end") return store;
    if (tag == "meta") {
      std::string key, value;
      in >> key;
      std::getline(in, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      store.meta_[key] = value;
    } else if (tag == "param") {
      std::string key;
      Eigen::Index rows = 0, cols = 0;
      if (!(in >> key >> rows >> cols) || rows < 0 || cols < 0) {
        throw CheckpointError("bad param header");
      }
      auto slash = key.find('/');
      if (slash == std::string::npos) throw CheckpointError("bad param key " + key);
      Matrix m(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
          std::string tok;
          if (!(in >> tok)) throw CheckpointError("truncated values for " + key);
          double v = 0;
          auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
          if (ec != std::errc() || ptr != tok.data() + tok.size()) {
            throw CheckpointError("bad value '" + tok + "' in " + key);
          }
          m(i, j) = v;
        }
      }
      store.add(key.substr(0, slash), key.substr(slash + 1), std::move(m));
    } else {
      throw CheckpointError("unexpected token '" + tag + "'");
    }
  }
  throw CheckpointError("missing end marker");
}

void ParameterStore::save(const std::string &path) const { write_file(path, serialize()); }

ParameterStore ParameterStore::load(const std::string &path) {
  return deserialize(read_file(path));
}

bool operator==(const ParameterStore &a, const ParameterStore &b) {
  if (a.meta_ != b.meta_ || a.params_.size() != b.params_.size()) return false;
  for (std::size_t i = 0; i < a.params_.size(); ++i) {
    const Parameter &x = a.params_[i];
    const Parameter &y = b.params_[i];
    if (x.key() != y.key() || x.value.rows() != y.value.rows() ||
        x.value.cols() != y.value.cols() || x.value != y.value) {
      return false;
    }
  }
  return true;
}

Matrix uniform_init(int rows, int cols, int fan_in, std::mt19937_64 &rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

Gradients Gradients::zeros_like(const ParameterStore &store) {
  Gradients g;
  for (const Parameter &p : store.params()) {
    g.values.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
  return g;
}

void Gradients::add(const Gradients &other) {
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
}

double Gradients::squared_norm() const {
  double s = 0;
  for (const Matrix &m : values) s += m.squaredNorm();
  return s;
}

Binding::Binding(Tape &tape, const ParameterStore &store) : store_(&store) {
  vars_.reserve(store.size());
  for (const Parameter &p : store.params()) vars_.push_back(tape.variable(p.value));
}

Binding::Binding(const ParameterStore &store, std::vector<Var> vars)
    : store_(&store), vars_(std::move(vars)) {
  if (vars_.size() != store.size()) throw std::invalid_argument("binding size mismatch");
}

Var Binding::operator[](const std::string &key) const { return vars_[store_->index(key)]; }

Gradients Binding::gradients() const {
  Gradients g;
  g.values.reserve(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const Matrix &grad = vars_[i].grad();
    if (grad.size() == 0) {
      const Matrix &v = store_->params()[i].value;
      g.values.push_back(Matrix::Zero(v.rows(), v.cols()));
    } else {
      g.values.push_back(grad);
    }
  }
  return g;
}

Binding constant_binding(Tape &tape, const ParameterStore &store) {
  std::vector<Var> vars;
  vars.reserve(store.size());
  for (const Parameter &p : store.params()) vars.push_back(tape.constant(p.value));
  return Binding(store, std::move(vars));
}

void Adam::step(ParameterStore &store, const Gradients &grads) {
  auto &params = store.params();
  if (m_.empty()) {
    for (const Parameter &p : params) {
      m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, t_);
  const double c2 = 1.0 - std::pow(config_.beta2, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix g = grads.values[i] + config_.weight_decay * params[i].value;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    Matrix m_hat = m_[i] / c1;
    Matrix v_hat = v_[i] / c2;
    params[i].value -=
        (config_.lr * m_hat.array() / (v_hat.array().sqrt() + config_.eps)).matrix();
    if (params[i].group == kWeightGroup) params[i].value = params[i].value.cwiseMax(0.0);
  }
}

}  // namespace mcsret
