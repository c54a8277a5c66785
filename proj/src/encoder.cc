//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mcsret/encoder.h"

namespace mcsret {

void EncoderConfig::validate() const {
  if (layers < 1) throw ValidationError("encoder: layers must be >= 1");
  if (node_dim < 1 || msg_dim < 1 || feature_dim < 1) {
    throw ValidationError("encoder: dimensions must be >= 1");
  }
}

GraphStructure make_structure(const Graph &g, int n) {
  if (n < g.num_nodes()) {
    throw SizeError("padded size " + std::to_string(n) + " smaller than graph '" + g.id() +
                    "' with " + std::to_string(g.num_nodes()) + " nodes");
  }
  GraphStructure s;
  s.real_nodes = g.num_nodes();
  s.n = n;
  s.adjacency = g.adjacency(n);
  s.degree = Matrix::Zero(n, n);
  for (int u = 0; u < n; ++u) s.degree(u, u) = s.adjacency.row(u).sum();
  const int m = static_cast<int>(g.edges().size());
  s.src_gather = Matrix::Zero(2 * m, n);
  s.dst_gather = Matrix::Zero(2 * m, n);
  s.directed.reserve(2 * m);
  for (int k = 0; k < m; ++k) {
    auto [u, v] = g.edges()[k];
    s.directed.emplace_back(u, v);
    s.directed.emplace_back(v, u);
    s.src_gather(2 * k, u) = 1;
    s.dst_gather(2 * k, v) = 1;
    s.src_gather(2 * k + 1, v) = 1;
    s.dst_gather(2 * k + 1, u) = 1;
  }
  return s;
}

void add_encoder_params(ParameterStore &store, const EncoderConfig &config,
                        std::mt19937_64 &rng) {
  config.validate();
  const int d = config.node_dim, de = config.msg_dim, f = config.feature_dim;
  const int in = config.gru_input_dim();
  store.add(kEncoderGroup, "feat_w", uniform_init(f, d, f, rng));
  store.add(kEncoderGroup, "feat_b", uniform_init(1, d, f, rng));
  store.add(kEncoderGroup, "msg_w", uniform_init(2 * d, de, 2 * d, rng));
  store.add(kEncoderGroup, "msg_b", uniform_init(1, de, 2 * d, rng));
  // GRU gates stacked as [reset | update | candidate].
  store.add(kEncoderGroup, "gru_wi", uniform_init(in, 3 * d, d, rng));
  store.add(kEncoderGroup, "gru_bi", Matrix::Zero(1, 3 * d));
  store.add(kEncoderGroup, "gru_wh", uniform_init(d, 3 * d, d, rng));
  store.add(kEncoderGroup, "gru_bh", Matrix::Zero(1, 3 * d));
}

Var encode_features(Tape &tape, const Binding &params, const EncoderConfig &config, int n) {
  Var z = tape.constant(Matrix::Ones(n, config.feature_dim));
  return ad::linear(z, params["theta/feat_w"], params["theta/feat_b"]);
}

namespace {

Var gru(const Binding &params, int d, Var x, Var h) {
  Var gi = ad::linear(x, params["theta/gru_wi"], params["theta/gru_bi"]);
  Var gh = ad::linear(h, params["theta/gru_wh"], params["theta/gru_bh"]);
  Var r = ad::sigmoid(ad::add(ad::slice_cols(gi, 0, d), ad::slice_cols(gh, 0, d)));
  Var z = ad::sigmoid(ad::add(ad::slice_cols(gi, d, d), ad::slice_cols(gh, d, d)));
  Var cand = ad::tanh(
      ad::add(ad::slice_cols(gi, 2 * d, d), ad::hadamard(r, ad::slice_cols(gh, 2 * d, d))));
  return ad::add(cand, ad::hadamard(z, ad::sub(h, cand)));
}

}  // namespace

Var propagate(Tape &tape, const Binding &params, const EncoderConfig &config,
              const GraphStructure &g, Var h, Var cross) {
  const int d = config.node_dim;
  if (h.rows() != g.n || h.cols() != d) throw ShapeError("propagate: embedding shape mismatch");
  Var w = params["theta/msg_w"];
  Var b = params["theta/msg_b"];
  // sum_v MP(h_v, h_u) = A H W_src + D (H W_dst + 1 b)
  Var from_src = ad::matmul(tape.constant(g.adjacency), ad::matmul(h, ad::slice_rows(w, 0, d)));
  Var at_dst = ad::matmul(tape.constant(g.degree),
                          ad::add(ad::matmul(h, ad::slice_rows(w, d, d)),
                                  ad::matmul(tape.constant(Matrix::Ones(g.n, 1)), b)));
  Var agg = ad::add(from_src, at_dst);
  if (config.cross_input) {
    if (!cross.valid()) cross = tape.constant(Matrix::Zero(g.n, 1));
    if (cross.rows() != g.n || cross.cols() != 1) {
      throw ShapeError("propagate: cross signal must be n x 1");
    }
    agg = ad::concat_cols(agg, cross);
  } else if (cross.valid()) {
    throw ShapeError("propagate: encoder has no cross input");
  }
  return gru(params, d, agg, h);
}

Var edge_messages(Tape &tape, const Binding &params, const GraphStructure &g, Var h) {
  const auto d = h.cols();
  Var w = params["theta/msg_w"];
  Var b = params["theta/msg_b"];
  const auto rows = static_cast<Eigen::Index>(g.directed.size());
  Var src = ad::matmul(tape.constant(g.src_gather), ad::matmul(h, ad::slice_rows(w, 0, d)));
  Var dst = ad::matmul(tape.constant(g.dst_gather), ad::matmul(h, ad::slice_rows(w, d, d)));
  return ad::add(ad::add(src, dst), ad::matmul(tape.constant(Matrix::Ones(rows, 1)), b));
}

EmbeddingStack encode_graph(Tape &tape, const Binding &params, const EncoderConfig &config,
                            const GraphStructure &g, const CrossHook &hook, bool with_edges) {
  EmbeddingStack out;
  out.h.reserve(config.layers + 1);
  out.h.push_back(encode_features(tape, params, config, g.n));
  for (int r = 0; r < config.layers; ++r) {
    Var cross = hook ? hook(r, out.h.back()) : Var{};
    out.h.push_back(propagate(tape, params, config, g, out.h.back(), cross));
  }
  if (with_edges) out.edges = edge_messages(tape, params, g, out.h.back());
  return out;
}

}  // namespace mcsret
