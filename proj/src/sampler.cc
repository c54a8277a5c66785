//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mcsret/sampler.h"

#include <algorithm>
#include <bit>
#include <deque>
#include <numeric>
#include <random>
#include <sstream>

#include "mcsret/parallel.h"

namespace mcsret {

namespace {

using Mask = std::uint64_t;

std::vector<Mask> masks_of(const Graph &g) {
  if (g.num_nodes() > 64) {
    throw SizeError("subgraph isomorphism supports at most 64 nodes");
  }
  std::vector<Mask> adj(g.num_nodes(), 0);
  for (auto [u, v] : g.edges()) {
    adj[u] |= Mask{1} << v;
    adj[v] |= Mask{1} << u;
  }
  return adj;
}

class Embedder {
 public:
  Embedder(const Graph &small, const Graph &big, std::int64_t budget)
      : sa_(masks_of(small)), ba_(masks_of(big)), budget_(budget) {
    ns_ = small.num_nodes();
    nb_ = big.num_nodes();
    // Connected-first order over non-isolated vertices; isolated small
    // vertices only need spare big vertices, which |V_small| <= |V_big|
    // already guarantees.
    Mask placed = 0, active = 0;
    for (int v = 0; v < ns_; ++v) if (sa_[v]) active |= Mask{1} << v;
    while (placed != active) {
      int best = -1, best_conn = -1, best_deg = -1;
      for (Mask s = active & ~placed; s; s &= s - 1) {
        int v = std::countr_zero(s);
        int conn = std::popcount(sa_[v] & placed);
        int deg = std::popcount(sa_[v]);
        if (conn > best_conn || (conn == best_conn && deg > best_deg)) {
          best = v;
          best_conn = conn;
          best_deg = deg;
        }
      }
      order_.push_back(best);
      placed |= Mask{1} << best;
    }
    map_.assign(ns_, -1);
  }

  bool run() { return recurse(0); }

 private:
  bool recurse(std::size_t depth) {
    if (++expansions_ > budget_) {
      throw IndeterminateError("subgraph isomorphism budget exhausted");
    }
    if (depth == order_.size()) return true;
    int v = order_[depth];
    int deg = std::popcount(sa_[v]);
    Mask cands = (nb_ >= 64 ? ~Mask{0} : (Mask{1} << nb_) - 1) & ~used_;
    for (Mask t = sa_[v] & mapped_; t; t &= t - 1) cands &= ba_[map_[std::countr_zero(t)]];
    for (Mask t = cands; t; t &= t - 1) {
      int w = std::countr_zero(t);
      if (std::popcount(ba_[w]) < deg) continue;
      map_[v] = w;
      used_ |= Mask{1} << w;
      mapped_ |= Mask{1} << v;
      bool ok = recurse(depth + 1);
      mapped_ &= ~(Mask{1} << v);
      used_ &= ~(Mask{1} << w);
      map_[v] = -1;
      if (ok) return true;
    }
    return false;
  }

  std::vector<Mask> sa_, ba_;
  std::int64_t budget_;
  int ns_ = 0, nb_ = 0;
  std::vector<int> order_;
  std::vector<int> map_;
  Mask used_ = 0, mapped_ = 0;
  std::int64_t expansions_ = 0;
};

std::vector<std::vector<int>> shuffled_adjacency(const Graph &g, std::mt19937_64 &rng) {
  auto adj = g.adjacency_list();
  for (auto &nbrs : adj) std::shuffle(nbrs.begin(), nbrs.end(), rng);
  return adj;
}

template <typename Int>
Int uniform_int(std::mt19937_64 &rng, Int lo, Int hi) {
  return std::uniform_int_distribution<Int>(lo, hi)(rng);
}

Graph sample_candidate(const std::vector<Graph> &sources, const SamplerConfig &config,
                       std::uint64_t seed, const std::string &id) {
  constexpr int kRetries = 100;
  for (int attempt = 0; attempt < kRetries; ++attempt) {
    std::mt19937_64 rng(mix_seed(seed, attempt));
    const Graph &src = sources[uniform_int<std::size_t>(rng, 0, sources.size() - 1)];
    int size = uniform_int(rng, config.min_nodes, config.max_nodes);
    try {
      return bfs_sample(src, size, rng(), id);
    } catch (const SamplingError &) {
    }
  }
  throw SamplingError("no source graph yields a connected sample of the requested size for '" +
                      id + "'");
}

}  // namespace

void SamplerConfig::validate() const {
  if (min_nodes < 1 || min_nodes > max_nodes) {
    throw ValidationError("sampler: need 1 <= min_nodes <= max_nodes");
  }
  if (!(0.0 <= eta_low && eta_low <= eta_high && eta_high <= 1.0)) {
    throw ValidationError("sampler: need 0 <= eta_low <= eta_high <= 1");
  }
  if (augment_min < 0 || augment_min > augment_max) {
    throw ValidationError("sampler: need 0 <= augment_min <= augment_max");
  }
  if (!(0.0 <= augment_edge_prob && augment_edge_prob <= 1.0)) {
    throw ValidationError("sampler: augment_edge_prob must lie in [0,1]");
  }
  if (corpus_count < 1 || query_count < 0 || eta_attempts < 1) {
    throw ValidationError("sampler: counts must be positive");
  }
}

SamplerConfig SamplerConfig::full_profile() { return SamplerConfig{}; }

SamplerConfig SamplerConfig::desk_profile() {
  SamplerConfig c;
  c.min_nodes = 8;
  c.max_nodes = 12;
  c.corpus_count = 100;
  c.query_count = 50;
  return c;
}

Graph bfs_sample(const Graph &source, int target_size, std::uint64_t seed, std::string id) {
  if (target_size < 1) throw SamplingError("target_size must be >= 1");
  if (target_size > source.num_nodes()) {
    throw SamplingError("source '" + source.id() + "' has fewer than " +
                        std::to_string(target_size) + " nodes");
  }
  std::mt19937_64 rng(seed);
  auto adj = shuffled_adjacency(source, rng);
  std::vector<int> starts(source.num_nodes());
  std::iota(starts.begin(), starts.end(), 0);
  std::shuffle(starts.begin(), starts.end(), rng);
  // Each retry uses the next node of a random permutation, so every start
  // node is tried at most once.
  for (int start : starts) {
    std::vector<char> seen(source.num_nodes(), 0);
    std::vector<int> visited{start};
    std::deque<int> queue{start};
    seen[start] = 1;
    while (!queue.empty() && static_cast<int>(visited.size()) < target_size) {
      int u = queue.front();
      queue.pop_front();
      for (int v : adj[u]) {
        if (seen[v]) continue;
        seen[v] = 1;
        visited.push_back(v);
        queue.push_back(v);
        if (static_cast<int>(visited.size()) == target_size) break;
      }
    }
    if (static_cast<int>(visited.size()) == target_size) {
      return source.induced(visited, std::move(id));
    }
  }
  throw SamplingError("no start node in '" + source.id() + "' reaches " +
                      std::to_string(target_size) + " nodes");
}

bool subgraph_isomorphic(const Graph &small, const Graph &big, std::int64_t budget) {
  if (small.num_nodes() > big.num_nodes() || small.num_edges() > big.num_edges()) return false;
  auto ds = small.degrees(), db = big.degrees();
  std::sort(ds.rbegin(), ds.rend());
  std::sort(db.rbegin(), db.rend());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i] > db[i]) return false;
  }
  return Embedder(small, big, budget).run();
}

Graph augment_query(const Graph &seed_query, const SamplerConfig &config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = seed_query.num_nodes();
  const int k = uniform_int(rng, config.augment_min, config.augment_max);
  if (k == 0) return seed_query;
  std::vector<Edge> edges = seed_query.edges();
  std::vector<std::vector<char>> present(n + k, std::vector<char>(n + k, 0));
  for (auto [u, v] : edges) present[u][v] = present[v][u] = 1;
  for (int i = n; i < n + k; ++i) {
    int anchor = uniform_int(rng, 0, i - 1);
    edges.emplace_back(anchor, i);
    present[anchor][i] = present[i][anchor] = 1;
  }
  std::bernoulli_distribution coin(config.augment_edge_prob);
  for (int b = n; b < n + k; ++b) {
    for (int a = 0; a < b; ++a) {
      if (present[a][b]) continue;
      if (coin(rng)) {
        edges.emplace_back(a, b);
        present[a][b] = present[b][a] = 1;
      }
    }
  }
  return Graph(seed_query.id(), n + k, std::move(edges));
}

double containment_fraction(const Graph &query, const std::vector<Graph> &corpus,
                            std::int64_t budget) {
  if (corpus.empty()) return 0.0;
  int hits = 0;
  for (const Graph &c : corpus) {
    try {
      hits += subgraph_isomorphic(query, c, budget);
    } catch (const IndeterminateError &) {
    }
  }
  return static_cast<double>(hits) / static_cast<double>(corpus.size());
}

GeneratedDataset generate_dataset(const std::vector<Graph> &sources, const SamplerConfig &config) {
  config.validate();
  if (sources.empty()) throw SamplingError("no source graphs");
  GeneratedDataset out;
  out.corpus.reserve(config.corpus_count);
  for (int i = 0; i < config.corpus_count; ++i) {
    out.corpus.push_back(
        sample_candidate(sources, config, mix_seed(config.seed, i), "c" + std::to_string(i)));
  }

  const std::uint64_t query_base = mix_seed(config.seed, 0x51ab1e);
  std::vector<Graph> seeds(config.query_count), queries(config.query_count);
  std::vector<double> fractions(config.query_count, -1.0);
  std::vector<int> attempts(config.query_count, 0);
  parallel_for(config.query_count, 1, [&](int q) {
    std::string id = "q" + std::to_string(q);
    for (int a = 0; a < config.eta_attempts; ++a) {
      std::uint64_t s = mix_seed(query_base, static_cast<std::uint64_t>(q) * 1000 + a);
      Graph candidate = sample_candidate(sources, config, s, id);
      ++attempts[q];
      double f = containment_fraction(candidate, out.corpus);
      if (f >= config.eta_low && f <= config.eta_high) {
        seeds[q] = candidate;
        fractions[q] = f;
        queries[q] = augment_query(candidate, config, mix_seed(s, 0xa09));
        return;
      }
    }
  });
  int total_attempts = std::accumulate(attempts.begin(), attempts.end(), 0);
  for (int q = 0; q < config.query_count; ++q) {
    if (fractions[q] < 0) {
      int accepted = static_cast<int>(
          std::count_if(fractions.begin(), fractions.end(), [](double f) { return f >= 0; }));
      std::ostringstream msg;
      msg << "query q" << q << " found no seed with containment fraction in ["
          << config.eta_low << ", " << config.eta_high << "] after " << config.eta_attempts
          << " attempts; acceptance rate " << accepted << "/" << total_attempts
          << " seed candidates";
      throw SamplingError(msg.str());
    }
  }
  out.queries = std::move(queries);
  out.seed_queries = std::move(seeds);
  out.seed_fractions = std::move(fractions);
  out.seed_attempts = total_attempts;
  return out;
}

std::vector<Graph> synthetic_sources(int count, int side, std::uint64_t seed) {
  std::vector<Graph> out;
  for (int g = 0; g < count; ++g) {
    std::mt19937_64 rng(mix_seed(seed, g));
    std::bernoulli_distribution keep_grid(0.85), add_diag(0.35);
    std::vector<Edge> edges;
    auto id = [side](int r, int c) { return r * side + c; };
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        if (c + 1 < side && keep_grid(rng)) edges.emplace_back(id(r, c), id(r, c + 1));
        if (r + 1 < side && keep_grid(rng)) edges.emplace_back(id(r, c), id(r + 1, c));
        if (r + 1 < side && c + 1 < side && add_diag(rng)) {
          edges.emplace_back(id(r, c), id(r + 1, c + 1));
        }
      }
    }
    out.emplace_back("src" + std::to_string(g), side * side, std::move(edges));
  }
  return out;
}

}  // namespace mcsret
