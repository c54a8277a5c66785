//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MCSRET_ALIGN_H_
#define MCSRET_ALIGN_H_

#include <random>
#include <string>
#include <vector>

#include "mcsret/autodiff.h"
#include "mcsret/graph.h"
#include "mcsret/params.h"

namespace mcsret {

struct SinkhornConfig {
  double zeta = 0.1;
  int iterations = 20;
  // Perturb U/zeta with Gumbel noise when a generator is supplied.
  bool gumbel_noise = false;

  void validate() const;
};

// exp(U/zeta) followed by `iterations` rounds of column then row
// normalization. The global max of U/zeta is subtracted first.
Var sinkhorn(Var u, const SinkhornConfig &config, std::mt19937_64 *rng = nullptr);
Matrix sinkhorn(const Matrix &u, const SinkhornConfig &config);

void add_align_params(ParameterStore &store, int node_dim, int hidden, std::mt19937_64 &rng);

// FF_phi: linear(d -> hidden), ReLU, linear(hidden -> d).
Var align_features(const Binding &params, Var h);

// sinkhorn(FF(H_q) FF(H_c)^T) from already transformed features.
Var gs_align_features(Var fq, Var fc, const SinkhornConfig &config,
                      std::mt19937_64 *rng = nullptr);
Var gs_align(const Binding &params, Var hq, Var hc, const SinkhornConfig &config,
             std::mt19937_64 *rng = nullptr);

// Maximum-weight perfect matching: result[i] is the column assigned to row i.
// Deterministic for a given input.
std::vector<int> hungarian_round(const Matrix &p);

struct AlignmentPlan {
  Matrix soft;
  std::vector<int> hard;  // query node -> corpus node
};

// Common edges of min(A_q, P A_c P^T) under the hard plan, as query-side
// pairs with their corpus images.
struct MatchedEdge {
  Edge query;
  Edge corpus;
};
std::vector<MatchedEdge> matched_edges(const Graph &query, const Graph &corpus,
                                       const std::vector<int> &hard);

// Two lines: `query_id<TAB>corpus_id<TAB>q:c,...` over real node pairs, then
// `query_id<TAB>corpus_id<TAB>edges<TAB>qu-qv:cu-cv,...`.
std::string format_alignment(const Graph &query, const Graph &corpus,
                             const std::vector<int> &hard);

}  // namespace mcsret

#endif  // MCSRET_ALIGN_H_
