//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MCSRET_ENCODER_H_
#define MCSRET_ENCODER_H_

#include <functional>
#include <random>
#include <vector>

#include "mcsret/autodiff.h"
#include "mcsret/graph.h"
#include "mcsret/params.h"

namespace mcsret {

struct EncoderConfig {
  int layers = 5;       // R
  int node_dim = 10;    // d
  int msg_dim = 20;     // d_E
  int feature_dim = 1;
  // Adds one GRU input column for a per-node cross-graph scalar.
  bool cross_input = false;

  void validate() const;
  int gru_input_dim() const { return msg_dim + (cross_input ? 1 : 0); }
};

// Constant matrices describing one graph padded to n nodes.
struct GraphStructure {
  int real_nodes = 0;
  int n = 0;
  Matrix adjacency;          // n x n
  Matrix degree;             // n x n diagonal
  // Directed edges: row 2k is (u -> v), row 2k+1 is (v -> u) for the k-th
  // canonical edge (u, v).
  std::vector<Edge> directed;
  Matrix src_gather;         // 2|E| x n one-hot
  Matrix dst_gather;         // 2|E| x n one-hot
};

GraphStructure make_structure(const Graph &g, int n);

void add_encoder_params(ParameterStore &store, const EncoderConfig &config, std::mt19937_64 &rng);

// Per-layer embeddings H[0..R] and, when requested, final-layer directed
// edge messages M(R).
struct EmbeddingStack {
  std::vector<Var> h;
  Var edges;
};

// Returns the per-node cross scalar (n x 1) for layer r given H(r).
using CrossHook = std::function<Var(int r, Var h)>;

Var encode_features(Tape &tape, const Binding &params, const EncoderConfig &config, int n);

// Incoming messages m_vu = MessagePassing(h_v, h_u) summed at u, then one
// GRU step with hidden state h. `cross` is n x 1 or invalid.
Var propagate(Tape &tape, const Binding &params, const EncoderConfig &config,
              const GraphStructure &g, Var h, Var cross = {});

// m_uv = MessagePassing(h_u, h_v) for every directed edge, 2|E| x d_E.
Var edge_messages(Tape &tape, const Binding &params, const GraphStructure &g, Var h);

EmbeddingStack encode_graph(Tape &tape, const Binding &params, const EncoderConfig &config,
                            const GraphStructure &g, const CrossHook &hook = {},
                            bool with_edges = false);

}  // namespace mcsret

#endif  // MCSRET_ENCODER_H_
