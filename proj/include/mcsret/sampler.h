//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MCSRET_SAMPLER_H_
#define MCSRET_SAMPLER_H_

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mcsret/graph.h"

namespace mcsret {

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IndeterminateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SamplerConfig {
  int min_nodes = 10;
  int max_nodes = 15;
  double eta_low = 0.1;
  double eta_high = 0.4;
  int corpus_count = 800;
  int query_count = 500;
  int augment_min = 2;
  int augment_max = 5;
  double augment_edge_prob = 0.2;
  int eta_attempts = 50;
  std::uint64_t seed = 0;

  // Throws ValidationError on inconsistent ranges.
  void validate() const;

  static SamplerConfig full_profile();
  static SamplerConfig desk_profile();
};

// Induced subgraph on the first `target_size` nodes visited by a BFS with
// shuffled neighbour order from a uniformly random start node. Retries other
// start nodes; throws SamplingError when none reaches enough nodes.
Graph bfs_sample(const Graph &source, int target_size, std::uint64_t seed,
                 std::string id = "sample");

// Non-induced subgraph isomorphism (small into big) by backtracking with
// degree pruning. Throws IndeterminateError when the expansion budget runs
// out before an answer is known.
bool subgraph_isomorphic(const Graph &small, const Graph &big,
                         std::int64_t budget = 2'000'000);

// Adds k in [augment_min, augment_max] nodes, each attached to a uniformly
// chosen existing node, then adds each absent pair touching a new node with
// probability augment_edge_prob.
Graph augment_query(const Graph &seed_query, const SamplerConfig &config,
                    std::uint64_t seed);

struct GeneratedDataset {
  std::vector<Graph> corpus;
  std::vector<Graph> queries;
  // Containment fraction measured for each accepted seed query.
  std::vector<double> seed_fractions;
  std::vector<Graph> seed_queries;
  int seed_attempts = 0;
};

GeneratedDataset generate_dataset(const std::vector<Graph> &sources,
                                  const SamplerConfig &config);

// Fraction of `corpus` that contains `query` as a subgraph; graphs whose
// check exhausts the budget count as not containing it.
double containment_fraction(const Graph &query, const std::vector<Graph> &corpus,
                            std::int64_t budget = 2'000'000);

// Synthetic source graphs: perturbed triangular lattices, planar and
// region-adjacency-like, used when no external source corpus is supplied.
std::vector<Graph> synthetic_sources(int count, int side, std::uint64_t seed);

}  // namespace mcsret

#endif  // MCSRET_SAMPLER_H_
