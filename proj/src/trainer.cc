//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mcsret/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "mcsret/metrics.h"
#include "mcsret/parallel.h"

namespace mcsret {

std::string target_name(Target t) {
  switch (t) {
    case Target::kMces: return "mces";
    case Target::kMccs: return "mccs";
    case Target::kCombo: return "combo";
  }
  return "unknown";
}

Target parse_target(const std::string &name) {
  for (Target t : {Target::kMces, Target::kMccs, Target::kCombo}) {
    if (target_name(t) == name) return t;
  }
  throw ValidationError("unknown target '" + name + "'");
}

Split split_queries(int count, double train_frac, double val_frac, double test_frac,
                    std::uint64_t seed) {
  if (count < 0) throw ValidationError("split: negative query count");
  for (double f : {train_frac, val_frac, test_frac}) {
    if (!(f >= 0 && f <= 1)) throw ValidationError("split: fractions must lie in [0,1]");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw ValidationError("split: fractions must sum to 1");
  }
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, 0x5b117));
  std::shuffle(order.begin(), order.end(), rng);
  // A small epsilon keeps products like 0.2 * 500 from flooring to 99.
  auto n_val = static_cast<int>(std::floor(val_frac * count + 1e-9));
  auto n_test = static_cast<int>(std::floor(test_frac * count + 1e-9));
  Split s;
  s.val.assign(order.begin(), order.begin() + n_val);
  s.test.assign(order.begin() + n_val, order.begin() + n_val + n_test);
  s.train.assign(order.begin() + n_val + n_test, order.end());
  for (auto *v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

TargetTable target_table(const std::vector<LabelRecord> &labels,
                         const std::vector<Graph> &queries, const std::vector<Graph> &corpus,
                         Target target, double combo_a) {
  std::map<std::string, int> qi, ci;
  for (std::size_t i = 0; i < queries.size(); ++i) qi[queries[i].id()] = static_cast<int>(i);
  for (std::size_t i = 0; i < corpus.size(); ++i) ci[corpus[i].id()] = static_cast<int>(i);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  TargetTable t(queries.size(), std::vector<double>(corpus.size(), nan));
  for (const LabelRecord &r : labels) {
    auto q = qi.find(r.query_id);
    auto c = ci.find(r.corpus_id);
    if (q == qi.end() || c == ci.end()) continue;
    double y = 0;
    switch (target) {
      case Target::kMces: y = r.y_mces; break;
      case Target::kMccs: y = r.y_mccs; break;
      case Target::kCombo:
        y = r.y_combo ? *r.y_combo : combine_labels(r.y_mces, r.y_mccs, combo_a);
        break;
    }
    t[q->second][c->second] = y;
  }
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t c = 0; c < corpus.size(); ++c) {
      if (std::isnan(t[q][c])) {
        throw ValidationError("no label for pair (" + queries[q].id() + ", " + corpus[c].id() +
                              ")");
      }
    }
  }
  return t;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (patience < 1) throw ValidationError("train: patience must be >= 1");
  if (max_epochs < 1) throw ValidationError("train: max_epochs must be >= 1");
  if (!(adam.lr > 0)) throw ValidationError("train: lr must be > 0");
  if (adam.weight_decay < 0) throw ValidationError("train: weight_decay must be >= 0");
}

std::vector<std::vector<double>> predict(const ParameterStore &store,
                                         const std::vector<Graph> &queries,
                                         const std::vector<int> &subset,
                                         const std::vector<Graph> &corpus) {
  Scorer scorer(store);
  scorer.index_corpus(corpus);
  std::vector<std::vector<double>> out;
  out.reserve(subset.size());
  for (int q : subset) out.push_back(scorer.score_corpus(queries[q]));
  return out;
}

double subset_mse(const std::vector<std::vector<double>> &scores, const TargetTable &targets,
                  const std::vector<int> &subset) {
  if (subset.empty()) return 0.0;
  double total = 0;
  for (std::size_t i = 0; i < subset.size(); ++i) total += mse(scores[i], targets[subset[i]]);
  return total / static_cast<double>(subset.size());
}

namespace {

struct PairRef {
  int query;
  int corpus;
};

}  // namespace

TrainResult train(const ParameterStore &init, const std::vector<Graph> &queries,
                  const std::vector<Graph> &corpus, const TargetTable &targets,
                  const Split &split, const TrainConfig &config) {
  config.validate();
  if (split.train.empty()) throw ValidationError("train: empty training split");
  if (corpus.empty()) throw ValidationError("train: empty corpus");
  ParameterStore store = init;
  ModelConfig model = ModelConfig::from_meta(store.meta());
  if (model.pad_size == 0) {
    model.pad_size = std::max(max_node_count(queries), max_node_count(corpus));
    model.to_meta(store.meta());
  }
  const int n = model.pad_size;
  std::vector<GraphStructure> qs, cs;
  for (const Graph &g : queries) qs.push_back(make_structure(g, n));
  for (const Graph &g : corpus) cs.push_back(make_structure(g, n));

  std::vector<PairRef> pairs;
  for (int q : split.train) {
    for (int c = 0; c < static_cast<int>(corpus.size()); ++c) pairs.push_back({q, c});
  }
  const std::vector<int> &val = split.val.empty() ? split.train : split.val;

  TrainResult result;
  result.best_val_mse = std::numeric_limits<double>::infinity();
  Adam adam(config.adam);
  std::mt19937_64 noise(mix_seed(config.seed, 0x6e015e));
  std::mt19937_64 *noise_rng = model.sinkhorn.gumbel_noise ? &noise : nullptr;
  int since_best = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(pairs.begin(), pairs.end(), rng);
    double sq_total = 0;
    for (std::size_t start = 0; start < pairs.size(); start += config.batch_size) {
      const std::size_t end = std::min(pairs.size(), start + config.batch_size);
      Tape tape;
      Binding params(tape, store);
      std::map<int, GraphEncoding> q_enc, c_enc;
      Var loss;
      for (std::size_t i = start; i < end; ++i) {
        const PairRef &p = pairs[i];
        Var s;
        if (is_late_interaction(model.kind)) {
          auto qi = q_enc.find(p.query);
          if (qi == q_enc.end()) {
            qi = q_enc.emplace(p.query, encode_late(tape, params, model, qs[p.query])).first;
          }
          auto ci = c_enc.find(p.corpus);
          if (ci == c_enc.end()) {
            ci = c_enc.emplace(p.corpus, encode_late(tape, params, model, cs[p.corpus])).first;
          }
          s = score_late(params, model, qi->second, ci->second, noise_rng);
        } else {
          s = score_xmcs(tape, params, model, qs[p.query], cs[p.corpus], noise_rng);
        }
        Var diff = ad::add_constant(s, -targets[p.query][p.corpus]);
        Var sq = ad::hadamard(diff, diff);
        loss = loss.valid() ? ad::add(loss, sq) : sq;
      }
      sq_total += loss.scalar();
      loss = ad::scale(loss, 1.0 / static_cast<double>(end - start));
      if (!std::isfinite(loss.scalar())) {
        std::ostringstream msg;
        msg << "non-finite loss in epoch " << epoch << ", batch pairs:";
        for (std::size_t i = start; i < end && i < start + 8; ++i) {
          msg << ' ' << queries[pairs[i].query].id() << '/' << corpus[pairs[i].corpus].id();
        }
        if (end - start > 8) msg << " ...";
        throw TrainingError(msg.str());
      }
      tape.backward(loss);
      adam.step(store, params.gradients());
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = sq_total / static_cast<double>(pairs.size());
    rec.val_mse = subset_mse(predict(store, queries, val, corpus), targets, val);
    result.history.push_back(rec);
    if (config.on_epoch) config.on_epoch(epoch, rec.train_mse, rec.val_mse);
    if (rec.val_mse < result.best_val_mse) {
      result.best_val_mse = rec.val_mse;
      result.best_epoch = epoch;
      result.best = store;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  if (result.best_epoch == 0) {
    throw TrainingError("validation MSE was never finite");
  }
  return result;
}

std::string format_history(const std::vector<EpochRecord> &history) {
  std::string out = "epoch\ttrain_mse\tval_mse\n";
  for (const EpochRecord &r : history) {
    out += std::to_string(r.epoch) + '\t' + format_double(r.train_mse) + '\t' +
           format_double(r.val_mse) + '\n';
  }
  return out;
}

std::optional<double> tagged_lambda(const std::string &dataset_tag) {
  static const std::map<std::string, double> kTable = {
      {"MM", 0.7}, {"MR", 0.1}, {"FM", 0.8}, {"FR", 1.4},
      {"DD", 10},  {"COX2", 1.1}, {"MSRC", 1},
  };
  std::string tag = dataset_tag;
  std::transform(tag.begin(), tag.end(), tag.begin(), ::toupper);
  auto it = kTable.find(tag);
  if (it == kTable.end()) return std::nullopt;
  return it->second;
}

std::vector<double> default_lambda_grid() { return {0.05, 0.1, 0.5, 1, 5, 10, 50}; }

LambdaSearch tune_lambda(const ModelConfig &model, std::uint64_t init_seed,
                         std::vector<double> grid, const std::string &dataset_tag,
                         const std::vector<Graph> &queries, const std::vector<Graph> &corpus,
                         const TargetTable &targets, const Split &split,
                         const TrainConfig &config) {
  if (grid.empty()) {
    if (auto l = tagged_lambda(dataset_tag)) {
      grid = {*l};
    } else {
      grid = default_lambda_grid();
    }
  }
  LambdaSearch out;
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    ModelConfig m = model;
    m.lambda = lambda;
    TrainResult r = train(init_model(m, init_seed), queries, corpus, targets, split, config);
    out.val_mse.emplace_back(lambda, r.best_val_mse);
    if (r.best_val_mse < best) {
      best = r.best_val_mse;
      out.best_lambda = lambda;
      out.best_run = std::move(r);
    }
  }
  return out;
}

}  // namespace mcsret
