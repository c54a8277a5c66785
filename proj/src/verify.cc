//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mcsret/verify.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mcsret/align.h"
#include "mcsret/oracle.h"
#include "mcsret/parallel.h"

namespace mcsret {

GradCheckResult grad_check_params(const ParameterStore &store,
                                  const std::function<Var(Tape &, const Binding &)> &fn,
                                  double eps, double floor) {
  std::vector<Matrix> inputs;
  for (const Parameter &p : store.params()) inputs.push_back(p.value);
  return grad_check(
      [&](Tape &tape, const std::vector<Var> &vars) { return fn(tape, Binding(store, vars)); },
      inputs, eps, floor);
}

Graph random_graph(int nodes, double p, std::mt19937_64 &rng, const std::string &id) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int u = 0; u < nodes; ++u) {
    for (int v = u + 1; v < nodes; ++v) {
      if (coin(rng)) edges.emplace_back(u, v);
    }
  }
  return Graph(id, nodes, std::move(edges));
}

std::vector<int> random_permutation(int n, std::mt19937_64 &rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult &c) { return c.passed(); });
}

namespace {

int uniform(std::mt19937_64 &rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

Matrix random_symmetric01(int n, double p, std::mt19937_64 &rng) {
  return random_graph(n, p, rng).adjacency(n);
}

// Disjoint cliques and paths, 0/1, with a random node order.
Matrix random_block_diagonal(std::mt19937_64 &rng) {
  int blocks = uniform(rng, 1, 4);
  std::vector<Edge> edges;
  int n = 0;
  for (int b = 0; b < blocks; ++b) {
    int size = uniform(rng, 1, 4);
    bool clique = uniform(rng, 0, 1) == 1;
    for (int i = 0; i < size; ++i) {
      for (int j = i + 1; j < size; ++j) {
        if (clique || j == i + 1) edges.emplace_back(n + i, n + j);
      }
    }
    n += size;
  }
  Graph g("blocks", n, edges);
  return g.relabeled(random_permutation(n, rng)).adjacency(n);
}

ModelConfig small_model(ModelKind kind) {
  ModelConfig m;
  m.kind = kind;
  m.encoder.cross_input = kind == ModelKind::kXmcs;
  return m;
}

Var score_by_kind(Tape &tape, const Binding &params, const ModelConfig &m,
                  const GraphStructure &q, const GraphStructure &c) {
  return score_pair(tape, params, m, q, c);
}

const std::vector<ModelKind> &all_models() {
  static const std::vector<ModelKind> kinds = {ModelKind::kLmces, ModelKind::kLmccs,
                                               ModelKind::kXmcs, ModelKind::kCombo,
                                               ModelKind::kBaseline};
  return kinds;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

VerifyReport gossip_suite(std::uint64_t seed) {
  VerifyReport r{"gossip", {}};
  std::mt19937_64 rng(seed);
  CheckResult eq{"gossip_equals_lcc", 0, 0, ""};
  for (int t = 0; t < 200; ++t) {
    int n = uniform(rng, 1, 12);
    double p = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    Matrix b = random_symmetric01(n, p, rng);
    ++eq.trials;
    if (exact_gossip(b, n) != largest_cc(b)) ++eq.failures;
  }
  r.checks.push_back(eq);

  CheckResult lim{"neural_gossip_limit", 0, 0, ""};
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    Matrix b = random_block_diagonal(rng);
    Tape tape;
    GossipOptions opt;
    opt.lambda = 1e-3;
    opt.steps = static_cast<int>(b.rows());
    opt.fixed_tau = 0;
    double s = gossip_tail(nullptr, tape.constant(b), opt).scalar();
    double err = std::abs(s - largest_cc(b));
    worst = std::max(worst, err);
    ++lim.trials;
    if (!(err < 0.05)) ++lim.failures;
  }
  lim.detail = "max |s - lcc| = " + fmt(worst);
  r.checks.push_back(lim);
  return r;
}

VerifyReport oracle_suite(std::uint64_t seed) {
  VerifyReport r{"oracle", {}};
  std::mt19937_64 rng(seed);
  CheckResult mces{"mces_vs_brute_force", 0, 0, ""}, mccs{"mccs_vs_brute_force", 0, 0, ""};
  CheckResult rescore{"mapping_rescore", 0, 0, ""};
  for (int t = 0; t < 200; ++t) {
    double p = std::uniform_real_distribution<double>(0.2, 0.8)(rng);
    Graph q = random_graph(uniform(rng, 1, 6), p, rng, "q");
    Graph c = random_graph(uniform(rng, 1, 6), p, rng, "c");
    PaddedPair pair = build_minimal_pair(q, c);
    McsResult em = exact_mces(pair), bm = brute_force_mces(pair);
    McsResult ec = exact_mccs(pair), bc = brute_force_mccs(pair);
    ++mces.trials;
    ++mccs.trials;
    rescore.trials += 2;
    if (em.value != bm.value) ++mces.failures;
    if (ec.value != bc.value) ++mccs.failures;
    if (common_edge_count(q, c, em.mapping) != em.value) ++rescore.failures;
    if (common_lcc_size(q, c, ec.mapping) != ec.value) ++rescore.failures;
  }
  r.checks = {mces, mccs, rescore};
  return r;
}

VerifyReport sinkhorn_suite(std::uint64_t seed) {
  VerifyReport r{"sinkhorn", {}};
  std::mt19937_64 rng(seed);
  SinkhornConfig cfg;
  {
    CheckResult c{"uniform_fixed_point", 1, 0, ""};
    Matrix p = sinkhorn(Matrix::Zero(3, 3), cfg);
    if ((p.array() - 1.0 / 3).abs().maxCoeff() > 1e-12) c.failures = 1;
    r.checks.push_back(c);
  }
  {
    CheckResult c{"scaled_identity_diagonal", 1, 0, ""};
    Matrix p = sinkhorn(10.0 * Matrix::Identity(3, 3), cfg);
    double d = p.diagonal().minCoeff();
    c.detail = "min diagonal " + fmt(d);
    if (!(d >= 0.95)) c.failures = 1;
    r.checks.push_back(c);
  }
  CheckResult rows{"row_sums", 0, 0, ""}, cols{"column_sums", 0, 0, ""};
  CheckResult mono{"deviation_non_increasing", 0, 0, ""}, shift{"shift_invariance", 0, 0, ""};
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_col = 0;
  for (int t = 0; t < 100; ++t) {
    int n = uniform(rng, 2, 20);
    Matrix u(n, n);
    for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = normal(rng);
    Matrix p = sinkhorn(u, cfg);
    double row_dev = (p.rowwise().sum().array() - 1).abs().maxCoeff();
    double col_dev = (p.colwise().sum().array() - 1).abs().maxCoeff();
    worst_col = std::max(worst_col, col_dev);
    ++rows.trials;
    ++cols.trials;
    if (row_dev > 1e-3) ++rows.failures;
    if (col_dev > 1e-3) ++cols.failures;
    // L1 marginal error after each full iteration.
    ++mono.trials;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= cfg.iterations; ++k) {
      SinkhornConfig ck = cfg;
      ck.iterations = k;
      Matrix pk = sinkhorn(u, ck);
      double dev = (pk.colwise().sum().array() - 1).abs().sum();
      if (dev > prev * (1 + 1e-9) + 1e-15) {
        ++mono.failures;
        break;
      }
      prev = dev;
    }
    ++shift.trials;
    Matrix ps = sinkhorn((u.array() + 3.25).matrix(), cfg);
    if ((ps - p).cwiseAbs().maxCoeff() > 1e-12) ++shift.failures;
  }
  cols.detail = "max column deviation " + fmt(worst_col) + " after " +
                std::to_string(cfg.iterations) + " iterations at zeta " + fmt(cfg.zeta);
  r.checks.insert(r.checks.end(), {rows, cols, mono, shift});

  CheckResult hung{"hungarian_beats_sampled", 0, 0, ""};
  for (int t = 0; t < 20; ++t) {
    int n = uniform(rng, 2, 9);
    Matrix u(n, n);
    for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = normal(rng);
    Matrix p = sinkhorn(u, cfg);
    std::vector<int> best = hungarian_round(p);
    double value = 0;
    for (int i = 0; i < n; ++i) value += p(i, best[i]);
    ++hung.trials;
    for (int s = 0; s < 1000; ++s) {
      std::vector<int> perm = random_permutation(n, rng);
      double v = 0;
      for (int i = 0; i < n; ++i) v += p(i, perm[i]);
      if (v > value + 1e-12) {
        ++hung.failures;
        break;
      }
    }
  }
  r.checks.push_back(hung);
  return r;
}

VerifyReport gradcheck_suite(std::uint64_t seed) {
  VerifyReport r{"gradcheck", {}};
  std::mt19937_64 rng(seed);
  {
    CheckResult c{"linear_layer", 1, 0, ""};
    Matrix x = Matrix::Random(4, 3), w = Matrix::Random(3, 5), b = Matrix::Random(1, 5);
    GradCheckResult g = grad_check(
        [](Tape &, const std::vector<Var> &v) {
          return ad::sum_all(ad::sigmoid(ad::linear(v[0], v[1], v[2])));
        },
        {x, w, b});
    c.detail = "max rel error " + fmt(g.max_rel_error);
    if (!(g.max_rel_error < 1e-7)) c.failures = 1;
    r.checks.push_back(c);
  }
  // Finite differences are only meaningful at differentiable points, so
  // draws whose relu/min/max inputs sit within reach of the step are redrawn.
  const double eps = 1e-5;
  const double min_margin = 100 * eps;
  for (ModelKind kind : all_models()) {
    CheckResult c{"score_" + model_name(kind), 0, 0, ""};
    double worst = 0;
    int redrawn = 0;
    while (c.trials < 10) {
      ModelConfig m = small_model(kind);
      ParameterStore store = init_model(m, rng());
      Graph q = random_graph(uniform(rng, 2, 5), 0.5, rng, "q");
      Graph g = random_graph(uniform(rng, 2, 5), 0.5, rng, "c");
      int n = std::max(q.num_nodes(), g.num_nodes());
      GraphStructure qs = make_structure(q, n), cs = make_structure(g, n);
      auto fn = [&](Tape &tape, const Binding &b) { return score_by_kind(tape, b, m, qs, cs); };
      {
        Tape probe;
        fn(probe, constant_binding(probe, store));
        if (probe.kink_margin() < min_margin && redrawn < 100) {
          ++redrawn;
          continue;
        }
      }
      GradCheckResult res = grad_check_params(store, fn, eps);
      worst = std::max(worst, res.max_rel_error);
      ++c.trials;
      if (!(res.max_rel_error < 1e-4)) ++c.failures;
    }
    c.detail = "max rel error " + fmt(worst) + ", " + std::to_string(redrawn) +
               " draws near a kink redrawn";
    r.checks.push_back(c);
  }
  return r;
}

VerifyReport invariants_suite(std::uint64_t seed) {
  VerifyReport r{"invariants", {}};
  std::mt19937_64 rng(seed);
  CheckResult rewrite{"min_rewrite_bitwise", 0, 0, ""};
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    int n = uniform(rng, 1, 12), d = uniform(rng, 1, 10);
    Matrix h(n, d), p(n, n), h2(n, d);
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < h2.size(); ++i) h2.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = std::abs(normal(rng));
    Tape tape;
    Var vh = tape.constant(h), vp = tape.constant(p), vh2 = tape.constant(h2);
    Var ph = ad::matmul(vp, vh2);
    Matrix lhs = ad::sub(vh, ad::minimum(vh, ph)).value();
    Matrix rhs = ad::relu(ad::sub(vh, ph)).value();
    ++rewrite.trials;
    if (lhs != rhs) ++rewrite.failures;
  }
  r.checks.push_back(rewrite);

  for (ModelKind kind : all_models()) {
    CheckResult eq{"relabel_invariance_" + model_name(kind), 0, 0, ""};
    CheckResult det{"deterministic_" + model_name(kind), 0, 0, ""};
    double worst = 0;
    for (int t = 0; t < 50; ++t) {
      ModelConfig m = small_model(kind);
      ParameterStore store = init_model(m, rng());
      Graph q = random_graph(uniform(rng, 2, 8), 0.4, rng, "q");
      Graph c = random_graph(uniform(rng, 2, 8), 0.4, rng, "c");
      m.pad_size = std::max(q.num_nodes(), c.num_nodes()) + 1;
      store.meta()["pad_size"] = std::to_string(m.pad_size);
      Scorer scorer(store);
      double s = scorer.score(q, c);
      double s2 = scorer.score(q, c);
      double moved = scorer.score(q.relabeled(random_permutation(q.num_nodes(), rng)),
                                  c.relabeled(random_permutation(c.num_nodes(), rng)));
      double rel = std::abs(moved - s) / std::max(1.0, std::abs(s));
      worst = std::max(worst, rel);
      ++eq.trials;
      ++det.trials;
      if (!(rel < 1e-8)) ++eq.failures;
      if (s != s2) ++det.failures;
    }
    eq.detail = "max rel change " + fmt(worst);
    r.checks.push_back(eq);
    r.checks.push_back(det);
  }
  return r;
}

}  // namespace

std::vector<std::string> verify_suites() {
  return {"gradcheck", "gossip", "oracle", "sinkhorn", "invariants"};
}

VerifyReport run_verify_suite(const std::string &suite, std::uint64_t seed) {
  if (suite == "gradcheck") return gradcheck_suite(seed);
  if (suite == "gossip") return gossip_suite(seed);
  if (suite == "oracle") return oracle_suite(seed);
  if (suite == "sinkhorn") return sinkhorn_suite(seed);
  if (suite == "invariants") return invariants_suite(seed);
  throw ValidationError("unknown verify suite '" + suite + "'");
}

std::string format_verify(const VerifyReport &report) {
  std::string out;
  for (const CheckResult &c : report.checks) {
    out += std::string(c.passed() ? "PASS" : "FAIL") + '\t' + report.suite + '\t' + c.name + '\t' +
           std::to_string(c.failures) + '/' + std::to_string(c.trials) + '\t' + c.detail + '\n';
  }
  return out;
}

}  // namespace mcsret
