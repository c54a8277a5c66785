//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MCSRET_SCORERS_H_
#define MCSRET_SCORERS_H_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mcsret/align.h"
#include "mcsret/encoder.h"
#include "mcsret/graph.h"
#include "mcsret/params.h"

namespace mcsret {

enum class ModelKind { kLmces, kLmccs, kXmcs, kCombo, kBaseline };

std::string model_name(ModelKind kind);
// Accepts lmces, lmccs, xmcs, combo, baseline.
ModelKind parse_model_kind(const std::string &name);
bool is_late_interaction(ModelKind kind);

struct ModelConfig {
  ModelKind kind = ModelKind::kLmces;
  EncoderConfig encoder;
  SinkhornConfig sinkhorn;
  int align_hidden = 16;
  int edge_hidden = 16;
  int thresh_hidden = 8;
  double lambda = 1.0;
  int gossip_steps = 0;  // 0: padded size
  bool gossip_rescale = false;
  double fixed_tau = -1;  // >= 0 replaces the threshold network
  int pad_size = 0;       // 0: per-pair maximum

  void validate() const;
  int padded(int query_nodes, int corpus_nodes) const;
  void to_meta(std::map<std::string, std::string> &meta) const;
  static ModelConfig from_meta(const std::map<std::string, std::string> &meta);
};

// Parameters for every group the model uses; config recorded in meta.
ParameterStore init_model(const ModelConfig &config, std::uint64_t seed);

// L_alpha on each directed edge message, averaged over both directions and
// scattered into an n x n matrix supported on the edges.
Var edge_score_matrix(Tape &tape, const Binding &params, const GraphStructure &g, Var edges);

// Thresh_beta over [mean, std, max] of the entries of x.
Var threshold(const Binding &params, Var x);

struct GossipOptions {
  double lambda = 1.0;
  int steps = 1;
  bool rescale = false;
  double fixed_tau = -1;
};

// X = (B + I)^T, then max_u || 2 sigmoid(relu(X - tau) / lambda) - 1 ||_1
// over columns. `params` is only read when no fixed tau is given.
Var gossip_tail(const Binding *params, Var b, const GossipOptions &options);

// sum_ij min(H_q, P H_c)_ij
Var coverage(Var hq, Var p, Var hc);

// Everything a late-interaction head needs from one graph.
struct GraphEncoding {
  std::vector<Var> h;         // H(0..R)
  std::vector<Var> features;  // FF_phi(H(r)); invalid where unused
  Var edge_scores;            // n x n, LMCCS and COMBO
  Var pooled;                 // 1 x d, baseline
};

GraphEncoding encode_late(Tape &tape, const Binding &params, const ModelConfig &config,
                          const GraphStructure &g);

Var lmces_head(const Binding &params, const ModelConfig &config, const GraphEncoding &q,
               const GraphEncoding &c, std::mt19937_64 *rng = nullptr);
Var lmccs_head(const Binding &params, const ModelConfig &config, const GraphEncoding &q,
               const GraphEncoding &c, std::mt19937_64 *rng = nullptr);
Var baseline_head(const GraphEncoding &q, const GraphEncoding &c);
Var score_late(const Binding &params, const ModelConfig &config, const GraphEncoding &q,
               const GraphEncoding &c, std::mt19937_64 *rng = nullptr);

Var score_lmces(Tape &tape, const Binding &params, const ModelConfig &config,
                const GraphStructure &q, const GraphStructure &c);
Var score_lmccs(Tape &tape, const Binding &params, const ModelConfig &config,
                const GraphStructure &q, const GraphStructure &c);
Var score_combo(Tape &tape, const Binding &params, const ModelConfig &config,
                const GraphStructure &q, const GraphStructure &c);
Var score_embed_min_baseline(Tape &tape, const Binding &params, const ModelConfig &config,
                             const GraphStructure &q, const GraphStructure &c);
// Interleaved encoding with per-layer cross signals.
Var score_xmcs(Tape &tape, const Binding &params, const ModelConfig &config,
               const GraphStructure &q, const GraphStructure &c,
               std::mt19937_64 *rng = nullptr);

// Dispatch on config.kind.
Var score_pair(Tape &tape, const Binding &params, const ModelConfig &config,
               const GraphStructure &q, const GraphStructure &c,
               std::mt19937_64 *rng = nullptr);

// Values of a GraphEncoding, reusable across tapes.
struct FrozenEncoding {
  std::vector<Matrix> h;
  std::vector<Matrix> features;
  std::vector<char> has_feature;
  Matrix edge_scores;
  Matrix pooled;
};
FrozenEncoding freeze(const GraphEncoding &e);
GraphEncoding thaw(Tape &tape, const FrozenEncoding &f);

// Inference over a fixed checkpoint. Late-interaction models encode each
// corpus graph once; XMCS re-encodes per pair.
class Scorer {
 public:
  explicit Scorer(ParameterStore store);

  const ModelConfig &config() const { return config_; }
  const ParameterStore &store() const { return store_; }

  double score(const Graph &query, const Graph &corpus) const;
  // Caches corpus encodings for late-interaction models.
  void index_corpus(const std::vector<Graph> &corpus);
  // Scores against the indexed corpus, in corpus order.
  std::vector<double> score_corpus(const Graph &query) const;
  AlignmentPlan align(const Graph &query, const Graph &corpus) const;

 private:
  int pad_for(int nodes) const;

  ParameterStore store_;
  ModelConfig config_;
  std::vector<Graph> corpus_;
  std::vector<FrozenEncoding> cache_;
  int corpus_pad_ = 0;
};

struct ScoreRecord {
  std::string query_id;
  std::string corpus_id;
  std::string model;
  double score = 0;
};

std::string format_scores(const std::vector<ScoreRecord> &scores);
std::vector<ScoreRecord> parse_scores(const std::string &text);

}  // namespace mcsret

#endif  // MCSRET_SCORERS_H_
