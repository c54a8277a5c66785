//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MCSRET_ORACLE_H_
#define MCSRET_ORACLE_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "mcsret/graph.h"

namespace mcsret {

// Exact maximum common edge / connected subgraph solvers used as labelers
// and test oracles.
//
// `mapping[c]` is the query node assigned to corpus node c, or -1.
struct McsResult {
  int value = 0;
  std::vector<int> mapping;
  bool proven_optimal = true;
};

// Search budget in branch-and-bound node expansions.
struct SearchBudget {
  std::int64_t max_nodes = 50'000'000;
};

class RefusedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// max over permutations of the number of common edges of A_q and P A_c P^T.
McsResult exact_mces(const PaddedPair &pair, SearchBudget budget = {});

// max over permutations of the largest connected component (in nodes) of
// min(A_q, P A_c P^T). Any two non-empty graphs share a one-node subgraph.
McsResult exact_mccs(const PaddedPair &pair, SearchBudget budget = {});

// Exhaustive enumeration of all N! permutations; refuses N > max_n.
McsResult brute_force_mces(const PaddedPair &pair, int max_n = 7);
McsResult brute_force_mccs(const PaddedPair &pair, int max_n = 7);

// Re-scores a corpus-to-query mapping independently of the solvers.
int common_edge_count(const Graph &query, const Graph &corpus,
                      const std::vector<int> &mapping);
int common_lcc_size(const Graph &query, const Graph &corpus,
                    const std::vector<int> &mapping);

// Gossip protocol: X(0) = I, X(t+1) = X(t)(B + I); returns the largest
// number of non-zero entries in a column of X(T). Entries are accumulated
// in saturating 64-bit integers, which keeps the non-zero pattern exact.
// Throws ValidationError unless B is square, symmetric and 0/1.
int exact_gossip(const Matrix &b, int steps);

// X(T) itself, for small T where entries fit in a double exactly.
Matrix gossip_matrix_power(const Matrix &b, int steps);

std::vector<std::vector<int>> connected_components(const Matrix &b);
int largest_cc(const Matrix &b);

struct LabelStats {
  int pairs = 0;
  int unproven = 0;
};

// One record per (query, corpus), query-major. y_combo is set iff combo_a.
std::vector<LabelRecord> label_pairs(const std::vector<Graph> &queries,
                                     const std::vector<Graph> &corpus,
                                     std::optional<double> combo_a,
                                     SearchBudget budget = {}, int workers = 1,
                                     LabelStats *stats = nullptr);

}  // namespace mcsret

#endif  // MCSRET_ORACLE_H_
