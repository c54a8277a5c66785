//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mcsret/align.h"

#include <cmath>
#include <limits>
#include <sstream>

namespace mcsret {

void SinkhornConfig::validate() const {
  if (!(zeta > 0)) throw ValidationError("sinkhorn: zeta must be > 0");
  if (iterations < 1) throw ValidationError("sinkhorn: iterations must be >= 1");
}

Var sinkhorn(Var u, const SinkhornConfig &config, std::mt19937_64 *rng) {
  config.validate();
  if (u.rows() != u.cols()) throw ShapeError("sinkhorn: score matrix must be square");
  Tape &tape = *u.tape();
  if (config.gumbel_noise && rng) {
    std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);
    Matrix g(u.rows(), u.cols());
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = -std::log(-std::log(unif(*rng)));
    u = ad::add(u, tape.constant(std::move(g)));
  }
  Var logits = ad::scale(u, 1.0 / config.zeta);
  Var s = ad::exp(ad::add_constant(logits, -logits.value().maxCoeff()));
  for (int t = 0; t < config.iterations; ++t) s = ad::row_normalize(ad::col_normalize(s));
  return s;
}

Matrix sinkhorn(const Matrix &u, const SinkhornConfig &config) {
  Tape tape;
  return sinkhorn(tape.constant(u), config).value();
}

void add_align_params(ParameterStore &store, int node_dim, int hidden, std::mt19937_64 &rng) {
  store.add(kAlignGroup, "ff1_w", uniform_init(node_dim, hidden, node_dim, rng));
  store.add(kAlignGroup, "ff1_b", uniform_init(1, hidden, node_dim, rng));
  store.add(kAlignGroup, "ff2_w", uniform_init(hidden, node_dim, hidden, rng));
  store.add(kAlignGroup, "ff2_b", uniform_init(1, node_dim, hidden, rng));
}

Var align_features(const Binding &params, Var h) {
  Var hidden = ad::relu(ad::linear(h, params["phi/ff1_w"], params["phi/ff1_b"]));
  return ad::linear(hidden, params["phi/ff2_w"], params["phi/ff2_b"]);
}

Var gs_align_features(Var fq, Var fc, const SinkhornConfig &config, std::mt19937_64 *rng) {
  return sinkhorn(ad::matmul(fq, ad::transpose(fc)), config, rng);
}

Var gs_align(const Binding &params, Var hq, Var hc, const SinkhornConfig &config,
             std::mt19937_64 *rng) {
  return gs_align_features(align_features(params, hq), align_features(params, hc), config, rng);
}

// Shortest augmenting path with row and column potentials on cost -p.
std::vector<int> hungarian_round(const Matrix &p) {
  if (p.rows() != p.cols()) {
    throw ShapeError("hungarian_round: matrix must be square, got " + std::to_string(p.rows()) +
                     "x" + std::to_string(p.cols()));
  }
  const int n = static_cast<int>(p.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);  // match[col] = row, 1-based
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = match[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = -p(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> out(n, -1);
  for (int j = 1; j <= n; ++j) out[match[j] - 1] = j - 1;
  return out;
}

std::vector<MatchedEdge> matched_edges(const Graph &query, const Graph &corpus,
                                       const std::vector<int> &hard) {
  std::vector<MatchedEdge> out;
  const int cn = corpus.num_nodes();
  for (auto [a, b] : query.edges()) {
    if (a >= static_cast<int>(hard.size()) || b >= static_cast<int>(hard.size())) continue;
    int x = hard[a], y = hard[b];
    if (x < cn && y < cn && corpus.has_edge(x, y)) out.push_back({{a, b}, {x, y}});
  }
  return out;
}

std::string format_alignment(const Graph &query, const Graph &corpus,
                             const std::vector<int> &hard) {
  std::ostringstream out;
  out << query.id() << '\t' << corpus.id() << '\t';
  bool first = true;
  for (int q = 0; q < query.num_nodes() && q < static_cast<int>(hard.size()); ++q) {
    if (hard[q] >= corpus.num_nodes()) continue;
    out << (first ? "" : ",") << q << ':' << hard[q];
    first = false;
  }
  out << '\n' << query.id() << '\t' << corpus.id() << "\tedges\t";
  first = true;
  for (const MatchedEdge &e : matched_edges(query, corpus, hard)) {
    out << (first ? "" : ",") << e.query.first << '-' << e.query.second << ':' << e.corpus.first
        << '-' << e.corpus.second;
    first = false;
  }
  out << '\n';
  return out.str();
}

}  // namespace mcsret
