//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mcsret/scorers.h"

#include <charconv>
#include <cmath>
#include <sstream>

#include "mcsret/parallel.h"

namespace mcsret {

std::string model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLmces: return "lmces";
    case ModelKind::kLmccs: return "lmccs";
    case ModelKind::kXmcs: return "xmcs";
    case ModelKind::kCombo: return "combo";
    case ModelKind::kBaseline: return "baseline";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string &name) {
  for (ModelKind k : {ModelKind::kLmces, ModelKind::kLmccs, ModelKind::kXmcs, ModelKind::kCombo,
                      ModelKind::kBaseline}) {
    if (model_name(k) == name) return k;
  }
  throw ValidationError("unknown model '" + name + "'");
}

bool is_late_interaction(ModelKind kind) { return kind != ModelKind::kXmcs; }

namespace {

bool uses_gossip(ModelKind k) { return k == ModelKind::kLmccs || k == ModelKind::kCombo; }
bool uses_layer_weights(ModelKind k) { return k == ModelKind::kLmces || k == ModelKind::kCombo; }

double meta_double(const std::map<std::string, std::string> &meta, const std::string &key,
                   double fallback) {
  auto it = meta.find(key);
  if (it == meta.end()) return fallback;
  double v = 0;
  const std::string &s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw CheckpointError("bad meta value for " + key + ": '" + s + "'");
  }
  return v;
}

int meta_int(const std::map<std::string, std::string> &meta, const std::string &key,
             int fallback) {
  double v = meta_double(meta, key, fallback);
  if (v != std::floor(v)) throw CheckpointError("meta " + key + " must be an integer");
  return static_cast<int>(v);
}

}  // namespace

void ModelConfig::validate() const {
  encoder.validate();
  sinkhorn.validate();
  if (align_hidden < 1 || edge_hidden < 1 || thresh_hidden < 1) {
    throw ValidationError("model: hidden sizes must be >= 1");
  }
  if (!(lambda > 0)) throw ValidationError("model: lambda must be > 0");
  if (gossip_steps < 0) throw ValidationError("model: gossip_steps must be >= 0");
  if (pad_size < 0) throw ValidationError("model: pad_size must be >= 0");
  if (kind == ModelKind::kXmcs && !encoder.cross_input) {
    throw ValidationError("model: xmcs requires an encoder with cross input");
  }
}

int ModelConfig::padded(int query_nodes, int corpus_nodes) const {
  int need = std::max(query_nodes, corpus_nodes);
  if (pad_size == 0) return need;
  if (need > pad_size) {
    throw SizeError("graph with " + std::to_string(need) + " nodes exceeds model pad size " +
                    std::to_string(pad_size));
  }
  return pad_size;
}

void ModelConfig::to_meta(std::map<std::string, std::string> &meta) const {
  meta["model"] = model_name(kind);
  meta["layers"] = std::to_string(encoder.layers);
  meta["node_dim"] = std::to_string(encoder.node_dim);
  meta["msg_dim"] = std::to_string(encoder.msg_dim);
  meta["feature_dim"] = std::to_string(encoder.feature_dim);
  meta["cross_input"] = encoder.cross_input ? "1" : "0";
  meta["zeta"] = format_double(sinkhorn.zeta);
  meta["sinkhorn_iterations"] = std::to_string(sinkhorn.iterations);
  meta["gumbel_noise"] = sinkhorn.gumbel_noise ? "1" : "0";
  meta["align_hidden"] = std::to_string(align_hidden);
  meta["edge_hidden"] = std::to_string(edge_hidden);
  meta["thresh_hidden"] = std::to_string(thresh_hidden);
  meta["lambda"] = format_double(lambda);
  meta["gossip_steps"] = std::to_string(gossip_steps);
  meta["gossip_rescale"] = gossip_rescale ? "1" : "0";
  meta["fixed_tau"] = format_double(fixed_tau);
  meta["pad_size"] = std::to_string(pad_size);
}

ModelConfig ModelConfig::from_meta(const std::map<std::string, std::string> &meta) {
  auto it = meta.find("model");
  if (it == meta.end()) throw CheckpointError("checkpoint has no model entry");
  ModelConfig c;
  c.kind = parse_model_kind(it->second);
  c.encoder.layers = meta_int(meta, "layers", c.encoder.layers);
  c.encoder.node_dim = meta_int(meta, "node_dim", c.encoder.node_dim);
  c.encoder.msg_dim = meta_int(meta, "msg_dim", c.encoder.msg_dim);
  c.encoder.feature_dim = meta_int(meta, "feature_dim", c.encoder.feature_dim);
  c.encoder.cross_input = meta_int(meta, "cross_input", 0) != 0;
  c.sinkhorn.zeta = meta_double(meta, "zeta", c.sinkhorn.zeta);
  c.sinkhorn.iterations = meta_int(meta, "sinkhorn_iterations", c.sinkhorn.iterations);
  c.sinkhorn.gumbel_noise = meta_int(meta, "gumbel_noise", 0) != 0;
  c.align_hidden = meta_int(meta, "align_hidden", c.align_hidden);
  c.edge_hidden = meta_int(meta, "edge_hidden", c.edge_hidden);
  c.thresh_hidden = meta_int(meta, "thresh_hidden", c.thresh_hidden);
  c.lambda = meta_double(meta, "lambda", c.lambda);
  c.gossip_steps = meta_int(meta, "gossip_steps", c.gossip_steps);
  c.gossip_rescale = meta_int(meta, "gossip_rescale", 0) != 0;
  c.fixed_tau = meta_double(meta, "fixed_tau", c.fixed_tau);
  c.pad_size = meta_int(meta, "pad_size", c.pad_size);
  c.validate();
  return c;
}

ParameterStore init_model(const ModelConfig &config, std::uint64_t seed) {
  config.validate();
  ParameterStore store;
  std::mt19937_64 rng(seed);
  add_encoder_params(store, config.encoder, rng);
  const int d = config.encoder.node_dim;
  if (config.kind != ModelKind::kBaseline) add_align_params(store, d, config.align_hidden, rng);
  if (uses_gossip(config.kind)) {
    const int de = config.encoder.msg_dim, eh = config.edge_hidden, th = config.thresh_hidden;
    store.add(kEdgeScorerGroup, "l1_w", uniform_init(de, eh, de, rng));
    store.add(kEdgeScorerGroup, "l1_b", uniform_init(1, eh, de, rng));
    store.add(kEdgeScorerGroup, "l2_w", uniform_init(eh, 1, eh, rng));
    store.add(kEdgeScorerGroup, "l2_b", uniform_init(1, 1, eh, rng));
    store.add(kThresholdGroup, "t1_w", uniform_init(3, th, 3, rng));
    store.add(kThresholdGroup, "t1_b", uniform_init(1, th, 3, rng));
    store.add(kThresholdGroup, "t2_w", uniform_init(th, 1, th, rng));
    store.add(kThresholdGroup, "t2_b", uniform_init(1, 1, th, rng));
  }
  if (uses_layer_weights(config.kind)) {
    store.add(kWeightGroup, "layer",
              Matrix::Constant(1, config.encoder.layers, 1.0 / config.encoder.layers));
  }
  if (config.kind == ModelKind::kCombo) store.add(kWeightGroup, "combo", Matrix::Constant(1, 2, 0.5));
  config.to_meta(store.meta());
  store.meta()["seed"] = std::to_string(seed);
  return store;
}

Var edge_score_matrix(Tape &tape, const Binding &params, const GraphStructure &g, Var edges) {
  Var hidden = ad::relu(ad::linear(edges, params["alpha/l1_w"], params["alpha/l1_b"]));
  Var directed = ad::linear(hidden, params["alpha/l2_w"], params["alpha/l2_b"]);  // 2|E| x 1
  // S_dir = Src^T diag(s) Dst, then symmetrized.
  Var spread = ad::hadamard(ad::matmul(directed, tape.constant(Matrix::Ones(1, g.n))),
                            tape.constant(g.dst_gather));
  Var s = ad::matmul(tape.constant(g.src_gather.transpose()), spread);
  return ad::scale(ad::add(s, ad::transpose(s)), 0.5);
}

Var threshold(const Binding &params, Var x) {
  const double count = static_cast<double>(x.value().size());
  Var mean = ad::scale(ad::sum_all(x), 1.0 / count);
  Var centered = ad::add_scalar(x, ad::scale(mean, -1.0));
  Var var = ad::scale(ad::sum_all(ad::hadamard(centered, centered)), 1.0 / count);
  Var sd = ad::sqrt(ad::add_constant(var, 1e-12));
  Var stats = ad::concat_cols(ad::concat_cols(mean, sd), ad::max_all(x));
  Var hidden = ad::relu(ad::linear(stats, params["beta/t1_w"], params["beta/t1_b"]));
  return ad::relu(ad::linear(hidden, params["beta/t2_w"], params["beta/t2_b"]));
}

Var gossip_tail(const Binding *params, Var b, const GossipOptions &options) {
  if (!(options.lambda > 0)) throw ValidationError("gossip: lambda must be > 0");
  if (options.steps < 1) throw ValidationError("gossip: steps must be >= 1");
  if (b.rows() != b.cols()) throw ShapeError("gossip: B must be square");
  Tape &tape = *b.tape();
  const auto n = b.rows();
  Var step = ad::add(b, tape.constant(Matrix::Identity(n, n)));
  Var x = step;  // X(1) = I (B + I)
  for (int t = 1; t < options.steps; ++t) {
    x = ad::matmul(x, step);
    if (options.rescale) x = ad::div_scalar(x, ad::max_all(x));
  }
  Var tau;
  if (options.fixed_tau >= 0) {
    tau = tape.constant(Matrix::Constant(1, 1, options.fixed_tau));
  } else {
    if (!params) throw std::invalid_argument("gossip: threshold parameters required");
    tau = threshold(*params, x);
  }
  Var shifted = ad::relu(ad::add_scalar(x, ad::scale(tau, -1.0)));
  Var filtered = ad::add_constant(ad::scale(ad::sigmoid(ad::scale(shifted, 1.0 / options.lambda)), 2.0), -1.0);
  return ad::max_all(ad::l1_norm_per_column(filtered));
}

Var coverage(Var hq, Var p, Var hc) { return ad::sum_all(ad::minimum(hq, ad::matmul(p, hc))); }

GraphEncoding encode_late(Tape &tape, const Binding &params, const ModelConfig &config,
                          const GraphStructure &g) {
  const ModelKind kind = config.kind;
  if (!is_late_interaction(kind)) throw std::invalid_argument("encode_late: not a late model");
  const int R = config.encoder.layers;
  GraphEncoding e;
  EmbeddingStack stack = encode_graph(tape, params, config.encoder, g, {}, uses_gossip(kind));
  e.h = stack.h;
  e.features.assign(R + 1, Var{});
  if (uses_layer_weights(kind)) {
    for (int r = 1; r <= R; ++r) e.features[r] = align_features(params, e.h[r]);
  } else if (kind == ModelKind::kLmccs) {
    e.features[R] = align_features(params, e.h[R]);
  }
  if (uses_gossip(kind)) e.edge_scores = edge_score_matrix(tape, params, g, stack.edges);
  if (kind == ModelKind::kBaseline) {
    e.pooled = ad::col_sum(ad::slice_rows(e.h[R], 0, g.real_nodes));
  }
  return e;
}

Var lmces_head(const Binding &params, const ModelConfig &config, const GraphEncoding &q,
               const GraphEncoding &c, std::mt19937_64 *rng) {
  const int R = config.encoder.layers;
  Var w = params["w/layer"];
  Var total;
  for (int r = 1; r <= R; ++r) {
    Var p = gs_align_features(q.features[r], c.features[r], config.sinkhorn, rng);
    Var term = ad::mul_scalar(coverage(q.h[r], p, c.h[r]), ad::slice_cols(w, r - 1, 1));
    total = total.valid() ? ad::add(total, term) : term;
  }
  return total;
}

Var lmccs_head(const Binding &params, const ModelConfig &config, const GraphEncoding &q,
               const GraphEncoding &c, std::mt19937_64 *rng) {
  const int R = config.encoder.layers;
  Var p = gs_align_features(q.features[R], c.features[R], config.sinkhorn, rng);
  Var b = ad::minimum(q.edge_scores,
                      ad::matmul(ad::matmul(p, c.edge_scores), ad::transpose(p)));
  GossipOptions options;
  options.lambda = config.lambda;
  options.steps = config.gossip_steps > 0 ? config.gossip_steps : static_cast<int>(b.rows());
  options.rescale = config.gossip_rescale;
  options.fixed_tau = config.fixed_tau;
  return gossip_tail(&params, b, options);
}

Var baseline_head(const GraphEncoding &q, const GraphEncoding &c) {
  return ad::sum_all(ad::minimum(q.pooled, c.pooled));
}

Var score_late(const Binding &params, const ModelConfig &config, const GraphEncoding &q,
               const GraphEncoding &c, std::mt19937_64 *rng) {
  switch (config.kind) {
    case ModelKind::kLmces: return lmces_head(params, config, q, c, rng);
    case ModelKind::kLmccs: return lmccs_head(params, config, q, c, rng);
    case ModelKind::kBaseline: return baseline_head(q, c);
    case ModelKind::kCombo: {
      Var w = params["w/combo"];
      Var a = ad::mul_scalar(lmccs_head(params, config, q, c, rng), ad::slice_cols(w, 0, 1));
      Var b = ad::mul_scalar(lmces_head(params, config, q, c, rng), ad::slice_cols(w, 1, 1));
      return ad::add(a, b);
    }
    case ModelKind::kXmcs: break;
  }
  throw std::invalid_argument("score_late: xmcs is not a late-interaction model");
}

namespace {

Var score_as(ModelKind kind, Tape &tape, const Binding &params, const ModelConfig &config,
             const GraphStructure &q, const GraphStructure &c) {
  if (config.kind != kind) {
    throw std::invalid_argument("model config is " + model_name(config.kind) + ", expected " +
                                model_name(kind));
  }
  return score_late(params, config, encode_late(tape, params, config, q),
                    encode_late(tape, params, config, c));
}

struct XmcsOutput {
  Var score;
  Var alignment;
};

XmcsOutput xmcs_forward(Tape &tape, const Binding &params, const ModelConfig &config,
                        const GraphStructure &q, const GraphStructure &c, std::mt19937_64 *rng) {
  if (q.n != c.n) throw ShapeError("xmcs: query and corpus padded sizes differ");
  const EncoderConfig &enc = config.encoder;
  Var hq = encode_features(tape, params, enc, q.n);
  Var hc = encode_features(tape, params, enc, c.n);
  for (int r = 0; r < enc.layers; ++r) {
    Var p = gs_align(params, hq, hc, config.sinkhorn, rng);
    Var dq = ad::sub(hq, ad::minimum(hq, ad::matmul(p, hc)));
    Var dc = ad::sub(hc, ad::minimum(hc, ad::matmul(ad::transpose(p), hq)));
    Var next_q = propagate(tape, params, enc, q, hq, ad::row_sum(dq));
    Var next_c = propagate(tape, params, enc, c, hc, ad::row_sum(dc));
    hq = next_q;
    hc = next_c;
  }
  Var p = gs_align(params, hq, hc, config.sinkhorn, rng);
  return {coverage(hq, p, hc), p};
}

}  // namespace

Var score_lmces(Tape &tape, const Binding &params, const ModelConfig &config,
                const GraphStructure &q, const GraphStructure &c) {
  return score_as(ModelKind::kLmces, tape, params, config, q, c);
}

Var score_lmccs(Tape &tape, const Binding &params, const ModelConfig &config,
                const GraphStructure &q, const GraphStructure &c) {
  return score_as(ModelKind::kLmccs, tape, params, config, q, c);
}

Var score_combo(Tape &tape, const Binding &params, const ModelConfig &config,
                const GraphStructure &q, const GraphStructure &c) {
  return score_as(ModelKind::kCombo, tape, params, config, q, c);
}

Var score_embed_min_baseline(Tape &tape, const Binding &params, const ModelConfig &config,
                             const GraphStructure &q, const GraphStructure &c) {
  return score_as(ModelKind::kBaseline, tape, params, config, q, c);
}

Var score_xmcs(Tape &tape, const Binding &params, const ModelConfig &config,
               const GraphStructure &q, const GraphStructure &c, std::mt19937_64 *rng) {
  if (config.kind != ModelKind::kXmcs) throw std::invalid_argument("score_xmcs: wrong model");
  return xmcs_forward(tape, params, config, q, c, rng).score;
}

Var score_pair(Tape &tape, const Binding &params, const ModelConfig &config,
               const GraphStructure &q, const GraphStructure &c, std::mt19937_64 *rng) {
  if (config.kind == ModelKind::kXmcs) return score_xmcs(tape, params, config, q, c, rng);
  return score_late(params, config, encode_late(tape, params, config, q),
                    encode_late(tape, params, config, c), rng);
}

FrozenEncoding freeze(const GraphEncoding &e) {
  FrozenEncoding f;
  for (Var v : e.h) f.h.push_back(v.value());
  for (Var v : e.features) {
    f.has_feature.push_back(v.valid());
    f.features.push_back(v.valid() ? v.value() : Matrix());
  }
  if (e.edge_scores.valid()) f.edge_scores = e.edge_scores.value();
  if (e.pooled.valid()) f.pooled = e.pooled.value();
  return f;
}

GraphEncoding thaw(Tape &tape, const FrozenEncoding &f) {
  GraphEncoding e;
  for (const Matrix &m : f.h) e.h.push_back(tape.constant(m));
  for (std::size_t i = 0; i < f.features.size(); ++i) {
    e.features.push_back(f.has_feature[i] ? tape.constant(f.features[i]) : Var{});
  }
  if (f.edge_scores.size()) e.edge_scores = tape.constant(f.edge_scores);
  if (f.pooled.size()) e.pooled = tape.constant(f.pooled);
  return e;
}

Scorer::Scorer(ParameterStore store)
    : store_(std::move(store)), config_(ModelConfig::from_meta(store_.meta())) {}

int Scorer::pad_for(int nodes) const {
  int n = config_.padded(nodes, corpus_pad_);
  return std::max(n, corpus_pad_);
}

double Scorer::score(const Graph &query, const Graph &corpus) const {
  Tape tape;
  Binding params = constant_binding(tape, store_);
  int n = config_.padded(query.num_nodes(), corpus.num_nodes());
  return score_pair(tape, params, config_, make_structure(query, n), make_structure(corpus, n))
      .scalar();
}

void Scorer::index_corpus(const std::vector<Graph> &corpus) {
  corpus_ = corpus;
  cache_.clear();
  corpus_pad_ = config_.pad_size > 0 ? config_.pad_size : max_node_count(corpus);
  if (max_node_count(corpus) > corpus_pad_) {
    throw SizeError("corpus graph exceeds model pad size " + std::to_string(corpus_pad_));
  }
  if (!is_late_interaction(config_.kind)) return;
  cache_.resize(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Tape tape;
    Binding params = constant_binding(tape, store_);
    cache_[i] = freeze(
        encode_late(tape, params, config_, make_structure(corpus[i], corpus_pad_)));
  }
}

std::vector<double> Scorer::score_corpus(const Graph &query) const {
  std::vector<double> out(corpus_.size());
  const int n = pad_for(query.num_nodes());
  GraphStructure qs = make_structure(query, n);
  if (!is_late_interaction(config_.kind)) {
    for (std::size_t i = 0; i < corpus_.size(); ++i) {
      Tape tape;
      Binding params = constant_binding(tape, store_);
      out[i] = score_xmcs(tape, params, config_, qs, make_structure(corpus_[i], n)).scalar();
    }
    return out;
  }
  Tape base;
  Binding base_params = constant_binding(base, store_);
  FrozenEncoding fq = freeze(encode_late(base, base_params, config_, qs));
  for (std::size_t i = 0; i < corpus_.size(); ++i) {
    Tape tape;
    Binding params = constant_binding(tape, store_);
    // A query larger than the indexed pad size needs the corpus re-encoded.
    GraphEncoding ec = n == corpus_pad_
                           ? thaw(tape, cache_[i])
                           : encode_late(tape, params, config_, make_structure(corpus_[i], n));
    out[i] = score_late(params, config_, thaw(tape, fq), ec).scalar();
  }
  return out;
}

AlignmentPlan Scorer::align(const Graph &query, const Graph &corpus) const {
  if (config_.kind == ModelKind::kBaseline) {
    throw std::invalid_argument("the embed-min baseline has no alignment");
  }
  Tape tape;
  Binding params = constant_binding(tape, store_);
  int n = config_.padded(query.num_nodes(), corpus.num_nodes());
  GraphStructure qs = make_structure(query, n), cs = make_structure(corpus, n);
  AlignmentPlan plan;
  if (config_.kind == ModelKind::kXmcs) {
    plan.soft = xmcs_forward(tape, params, config_, qs, cs, nullptr).alignment.value();
  } else {
    const int R = config_.encoder.layers;
    GraphEncoding eq = encode_late(tape, params, config_, qs);
    GraphEncoding ec = encode_late(tape, params, config_, cs);
    plan.soft = gs_align_features(eq.features[R], ec.features[R], config_.sinkhorn).value();
  }
  plan.hard = hungarian_round(plan.soft);
  return plan;
}

std::string format_scores(const std::vector<ScoreRecord> &scores) {
  std::string out;
  for (const ScoreRecord &s : scores) {
    out += s.query_id + '\t' + s.corpus_id + '\t' + s.model + '\t' + format_double(s.score) + '\n';
  }
  return out;
}

std::vector<ScoreRecord> parse_scores(const std::string &text) {
  std::vector<ScoreRecord> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      auto tab = line.find('\t', start);
      f.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.size() != 4) throw ParseError(line_no, "expected 4 tab-separated fields");
    ScoreRecord r{f[0], f[1], f[2], 0};
    auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), r.score);
    if (ec != std::errc() || ptr != f[3].data() + f[3].size()) {
      throw ParseError(line_no, "bad score '" + f[3] + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mcsret
