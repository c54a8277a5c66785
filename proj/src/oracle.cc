//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mcsret/oracle.h"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>

#include "mcsret/parallel.h"

namespace mcsret {

namespace {

using Mask = std::uint64_t;

constexpr int kMaxSearchNodes = 64;

std::vector<Mask> bit_adjacency(const Graph &g) {
  if (g.num_nodes() > kMaxSearchNodes) {
    throw SizeError("exact solvers support at most 64 nodes, graph '" + g.id() +
                    "' has " + std::to_string(g.num_nodes()));
  }
  std::vector<Mask> adj(g.num_nodes(), 0);
  for (auto [u, v] : g.edges()) {
    adj[u] |= Mask{1} << v;
    adj[v] |= Mask{1} << u;
  }
  return adj;
}

Mask low_bits(int n) { return n >= 64 ? ~Mask{0} : (Mask{1} << n) - 1; }

int popcount(Mask m) { return std::popcount(m); }

int edges_within(const std::vector<Mask> &adj, Mask set) {
  int twice = 0;
  for (Mask s = set; s; s &= s - 1) twice += popcount(adj[std::countr_zero(s)] & set);
  return twice / 2;
}

// Vertices reachable from `from` moving only through `allowed`, excluding
// `from` itself.
Mask reach(const std::vector<Mask> &adj, Mask from, Mask allowed) {
  Mask seen = from;
  Mask frontier = from;
  while (frontier) {
    Mask next = 0;
    for (Mask s = frontier; s; s &= s - 1) next |= adj[std::countr_zero(s)];
    next &= allowed & ~seen;
    seen |= next;
    frontier = next;
  }
  return seen & ~from;
}

// Left graph is mapped into the right graph; |V_left| <= |V_right|.
struct Sides {
  const Graph *left;
  const Graph *right;
  bool left_is_query;
};

Sides choose_sides(const PaddedPair &pair) {
  const Graph &q = pair.query;
  const Graph &c = pair.corpus;
  bool query_left = q.num_nodes() < c.num_nodes() ||
                    (q.num_nodes() == c.num_nodes() && q.num_edges() <= c.num_edges());
  return query_left ? Sides{&q, &c, true} : Sides{&c, &q, false};
}

// Fills unmapped left nodes with unused right nodes and converts a
// left->right map into the corpus->query convention.
std::vector<int> to_corpus_mapping(const Sides &sides, std::vector<int> lmap,
                                   bool complete) {
  int nl = sides.left->num_nodes();
  int nr = sides.right->num_nodes();
  if (complete) {
    std::vector<char> used(nr, 0);
    for (int w : lmap) if (w >= 0) used[w] = 1;
    int next = 0;
    for (int v = 0; v < nl; ++v) {
      if (lmap[v] >= 0) continue;
      while (used[next]) ++next;
      lmap[v] = next;
      used[next] = 1;
    }
  }
  if (!sides.left_is_query) return lmap;
  std::vector<int> mapping(nr, -1);
  for (int v = 0; v < nl; ++v) if (lmap[v] >= 0) mapping[lmap[v]] = v;
  return mapping;
}

// Connectivity-first vertex order: start at the highest degree vertex, then
// repeatedly take the vertex with the most already-ordered neighbours.
std::vector<int> search_order(const std::vector<Mask> &adj) {
  int n = static_cast<int>(adj.size());
  std::vector<int> order;
  Mask placed = 0;
  Mask active = 0;
  for (int v = 0; v < n; ++v) if (adj[v]) active |= Mask{1} << v;
  while (placed != active) {
    int best = -1;
    int best_conn = -1, best_deg = -1;
    for (Mask s = active & ~placed; s; s &= s - 1) {
      int v = std::countr_zero(s);
      int conn = popcount(adj[v] & placed);
      int deg = popcount(adj[v]);
      if (conn > best_conn || (conn == best_conn && deg > best_deg)) {
        best = v;
        best_conn = conn;
        best_deg = deg;
      }
    }
    order.push_back(best);
    placed |= Mask{1} << best;
  }
  return order;
}

class EdgeSearch {
 public:
  EdgeSearch(const Sides &sides, SearchBudget budget)
      : sides_(sides),
        la_(bit_adjacency(*sides.left)),
        ra_(bit_adjacency(*sides.right)),
        budget_(budget) {
    nl_ = sides.left->num_nodes();
    nr_ = sides.right->num_nodes();
    all_r_ = low_bits(nr_);
    order_ = search_order(la_);
    lmap_.assign(nl_, -1);
    best_map_ = lmap_;
    cap_ = std::min(sides.left->num_edges(), sides.right->num_edges());
    for (int w = 0; w < nr_; ++w) if (ra_[w] == 0) isolated_r_ |= Mask{1} << w;
  }

  McsResult run() {
    if (cap_ > 0) recurse(0, 0);
    McsResult r;
    r.value = std::max(best_, 0);
    r.mapping = to_corpus_mapping(sides_, best_map_, true);
    r.proven_optimal = !aborted_;
    return r;
  }

 private:
  int bound(int matched) const {
    Mask unassigned = 0;
    for (std::size_t i = 0; i < order_.size(); ++i) {
      if (lmap_[order_[i]] < 0) unassigned |= Mask{1} << order_[i];
    }
    Mask unused = all_r_ & ~used_r_;
    int cross = 0;
    for (Mask s = assigned_l_; s; s &= s - 1) {
      int a = std::countr_zero(s);
      cross += std::min(popcount(la_[a] & unassigned), popcount(ra_[lmap_[a]] & unused));
    }
    int inner = std::min(edges_within(la_, unassigned), edges_within(ra_, unused));
    return matched + cross + inner;
  }

  void recurse(std::size_t depth, int matched) {
    if (aborted_ || best_ == cap_) return;
    if (++expansions_ > budget_.max_nodes) {
      aborted_ = true;
      return;
    }
    if (matched > best_) {
      best_ = matched;
      best_map_ = lmap_;
      if (best_ == cap_) return;
    }
    if (depth == order_.size()) return;
    if (bound(matched) <= best_) return;

    int v = order_[depth];
    struct Cand {
      int w, gain, deg;
    };
    std::vector<Cand> cands;
    bool isolated_tried = false;
    for (Mask s = all_r_ & ~used_r_; s; s &= s - 1) {
      int w = std::countr_zero(s);
      if (isolated_r_ >> w & 1) {
        if (isolated_tried) continue;
        isolated_tried = true;
      }
      int gain = 0;
      for (Mask t = la_[v] & assigned_l_; t; t &= t - 1) {
        int a = std::countr_zero(t);
        gain += static_cast<int>(ra_[w] >> lmap_[a] & 1);
      }
      cands.push_back({w, gain, popcount(ra_[w])});
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand &x, const Cand &y) {
      return x.gain != y.gain ? x.gain > y.gain : x.deg > y.deg;
    });
    for (const Cand &c : cands) {
      lmap_[v] = c.w;
      assigned_l_ |= Mask{1} << v;
      used_r_ |= Mask{1} << c.w;
      recurse(depth + 1, matched + c.gain);
      used_r_ &= ~(Mask{1} << c.w);
      assigned_l_ &= ~(Mask{1} << v);
      lmap_[v] = -1;
      if (aborted_ || best_ == cap_) return;
    }
  }

  Sides sides_;
  std::vector<Mask> la_, ra_;
  SearchBudget budget_;
  int nl_ = 0, nr_ = 0;
  Mask all_r_ = 0, isolated_r_ = 0;
  std::vector<int> order_;
  std::vector<int> lmap_, best_map_;
  Mask assigned_l_ = 0, used_r_ = 0;
  int best_ = -1;
  int cap_ = 0;
  std::int64_t expansions_ = 0;
  bool aborted_ = false;
};

// Grows a connected common region one left vertex at a time. A frontier
// vertex is either mapped to a right vertex that closes a common edge with
// the region, or those images are forbidden for it (it may still join later
// through a different image).
class ConnectedSearch {
 public:
  ConnectedSearch(const Sides &sides, SearchBudget budget)
      : sides_(sides),
        la_(bit_adjacency(*sides.left)),
        ra_(bit_adjacency(*sides.right)),
        budget_(budget) {
    nl_ = sides.left->num_nodes();
    nr_ = sides.right->num_nodes();
    all_r_ = low_bits(nr_);
    lmap_.assign(nl_, -1);
    forbidden_.assign(nl_, 0);
    cap_ = std::min(nl_, nr_);
  }

  McsResult run() {
    // One matched node is always a connected common subgraph.
    best_ = 1;
    best_map_ = lmap_;
    best_map_[0] = 0;
    std::vector<int> order = search_order(la_);
    for (int s : order) {
      if (aborted_ || best_ == cap_) break;
      Mask seed_bit = Mask{1} << s;
      int reach_l = popcount(reach(la_, seed_bit, low_bits(nl_) & ~excluded_l_));
      if (1 + reach_l <= best_) {
        excluded_l_ |= seed_bit;
        continue;
      }
      for (int w = 0; w < nr_ && !aborted_ && best_ < cap_; ++w) {
        if (ra_[w] == 0) continue;
        assign(s, w);
        recurse();
        unassign(s, w);
      }
      excluded_l_ |= seed_bit;
    }
    McsResult r;
    r.value = best_;
    r.mapping = to_corpus_mapping(sides_, best_map_, false);
    r.proven_optimal = !aborted_;
    return r;
  }

 private:
  void assign(int v, int w) {
    lmap_[v] = w;
    region_l_ |= Mask{1} << v;
    used_r_ |= Mask{1} << w;
    region_r_ |= Mask{1} << w;
  }
  void unassign(int v, int w) {
    lmap_[v] = -1;
    region_l_ &= ~(Mask{1} << v);
    used_r_ &= ~(Mask{1} << w);
    region_r_ &= ~(Mask{1} << w);
  }

  Mask compatible(int v) const {
    Mask images = 0;
    for (Mask t = la_[v] & region_l_; t; t &= t - 1) images |= ra_[lmap_[std::countr_zero(t)]];
    return images & ~used_r_ & ~forbidden_[v];
  }

  void recurse() {
    if (aborted_ || best_ == cap_) return;
    if (++expansions_ > budget_.max_nodes) {
      aborted_ = true;
      return;
    }
    int size = popcount(region_l_);
    if (size > best_) {
      best_ = size;
      best_map_ = lmap_;
      if (best_ == cap_) return;
    }
    Mask free_l = low_bits(nl_) & ~excluded_l_ & ~region_l_;
    int reach_l = popcount(reach(la_, region_l_, free_l));
    int reach_r = popcount(reach(ra_, region_r_, all_r_ & ~used_r_));
    if (size + std::min(reach_l, reach_r) <= best_) return;

    // Fail-first: the frontier vertex with the fewest compatible images.
    Mask frontier = 0;
    for (Mask t = region_l_; t; t &= t - 1) frontier |= la_[std::countr_zero(t)];
    frontier &= free_l;
    int v = -1;
    Mask cands = 0;
    int fewest = std::numeric_limits<int>::max();
    for (Mask t = frontier; t; t &= t - 1) {
      int u = std::countr_zero(t);
      Mask c = compatible(u);
      int k = popcount(c);
      if (k > 0 && k < fewest) {
        fewest = k;
        v = u;
        cands = c;
      }
    }
    if (v < 0) return;

    for (Mask t = cands; t; t &= t - 1) {
      int w = std::countr_zero(t);
      assign(v, w);
      recurse();
      unassign(v, w);
      if (aborted_ || best_ == cap_) return;
    }
    Mask saved = forbidden_[v];
    forbidden_[v] |= cands;
    recurse();
    forbidden_[v] = saved;
  }

  Sides sides_;
  std::vector<Mask> la_, ra_;
  SearchBudget budget_;
  int nl_ = 0, nr_ = 0;
  Mask all_r_ = 0;
  std::vector<int> lmap_, best_map_;
  std::vector<Mask> forbidden_;
  Mask region_l_ = 0, region_r_ = 0, used_r_ = 0, excluded_l_ = 0;
  int best_ = 0, cap_ = 0;
  std::int64_t expansions_ = 0;
  bool aborted_ = false;
};

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }
  int size(int x) { return size_[find(x)]; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

void validate_binary_symmetric(const Matrix &b) {
  if (b.rows() != b.cols()) {
    throw ValidationError("matrix must be square, got " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
  }
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double x = b(i, j);
      if (x != 0.0 && x != 1.0) throw ValidationError("matrix entries must be 0/1");
      if (x != b(j, i)) throw ValidationError("matrix must be symmetric");
    }
  }
}

// Brute force: corpus node j is sent to padded query slot perm[j].
template <typename Objective>
McsResult brute_force(const PaddedPair &pair, int max_n, Objective objective) {
  int n = pair.n;
  if (n > max_n) {
    throw RefusedError("brute force refused: padded size " + std::to_string(n) +
                       " exceeds " + std::to_string(max_n));
  }
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  McsResult best;
  best.value = -1;
  Matrix common(n, n);
  do {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        common(perm[j], perm[k]) = std::min(pair.adj_query(perm[j], perm[k]), pair.adj_corpus(j, k));
      }
    }
    int value = objective(common);
    if (value > best.value) {
      best.value = value;
      best.mapping.assign(pair.corpus.num_nodes(), -1);
      for (int j = 0; j < pair.corpus.num_nodes(); ++j) {
        if (perm[j] < pair.query.num_nodes()) best.mapping[j] = perm[j];
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  best.proven_optimal = true;
  return best;
}

}  // namespace

McsResult exact_mces(const PaddedPair &pair, SearchBudget budget) {
  return EdgeSearch(choose_sides(pair), budget).run();
}

McsResult exact_mccs(const PaddedPair &pair, SearchBudget budget) {
  return ConnectedSearch(choose_sides(pair), budget).run();
}

McsResult brute_force_mces(const PaddedPair &pair, int max_n) {
  return brute_force(pair, max_n, [](const Matrix &common) {
    return static_cast<int>(common.sum() / 2.0);
  });
}

McsResult brute_force_mccs(const PaddedPair &pair, int max_n) {
  return brute_force(pair, max_n, [](const Matrix &common) { return largest_cc(common); });
}

int common_edge_count(const Graph &query, const Graph &corpus,
                      const std::vector<int> &mapping) {
  int count = 0;
  for (auto [a, b] : corpus.edges()) {
    int qa = mapping[a], qb = mapping[b];
    if (qa >= 0 && qb >= 0 && query.has_edge(qa, qb)) ++count;
  }
  return count;
}

int common_lcc_size(const Graph &query, const Graph &corpus,
                    const std::vector<int> &mapping) {
  UnionFind uf(query.num_nodes());
  for (auto [a, b] : corpus.edges()) {
    int qa = mapping[a], qb = mapping[b];
    if (qa >= 0 && qb >= 0 && query.has_edge(qa, qb)) uf.unite(qa, qb);
  }
  int best = 0;
  for (int v = 0; v < query.num_nodes(); ++v) best = std::max(best, uf.size(v));
  return best;
}

int exact_gossip(const Matrix &b, int steps) {
  validate_binary_symmetric(b);
  const int n = static_cast<int>(b.rows());
  if (n == 0) return 0;
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  auto sat_add = [](std::uint64_t x, std::uint64_t y) { return x > kMax - y ? kMax : x + y; };
  std::vector<std::uint64_t> x(n * n, 0), next(n * n);
  for (int i = 0; i < n; ++i) x[i * n + i] = 1;
  // (B + I) is 0/1 apart from a possible 2 on a diagonal that already holds
  // a self-loop; both factors are small so products cannot overflow before
  // the saturating sum.
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        std::uint64_t acc = 0;
        for (int k = 0; k < n; ++k) {
          std::uint64_t f = static_cast<std::uint64_t>(b(k, j)) + (k == j ? 1 : 0);
          std::uint64_t v = x[i * n + k];
          if (f == 0 || v == 0) continue;
          acc = sat_add(acc, v);
          if (f == 2) acc = sat_add(acc, v);
        }
        next[i * n + j] = acc;
      }
    }
    x.swap(next);
  }
  int best = 0;
  for (int u = 0; u < n; ++u) {
    int nonzero = 0;
    for (int i = 0; i < n; ++i) nonzero += x[i * n + u] != 0;
    best = std::max(best, nonzero);
  }
  return best;
}

Matrix gossip_matrix_power(const Matrix &b, int steps) {
  validate_binary_symmetric(b);
  Matrix step = b + Matrix::Identity(b.rows(), b.cols());
  Matrix x = Matrix::Identity(b.rows(), b.cols());
  for (int t = 0; t < steps; ++t) x = x * step;
  return x;
}

std::vector<std::vector<int>> connected_components(const Matrix &b) {
  validate_binary_symmetric(b);
  const int n = static_cast<int>(b.rows());
  UnionFind uf(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (b(i, j) != 0.0) uf.unite(i, j);
    }
  }
  std::vector<int> root_index(n, -1);
  std::vector<std::vector<int>> comps;
  for (int v = 0; v < n; ++v) {
    int r = uf.find(v);
    if (root_index[r] < 0) {
      root_index[r] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    comps[root_index[r]].push_back(v);
  }
  return comps;
}

int largest_cc(const Matrix &b) {
  std::size_t best = 0;
  for (const auto &c : connected_components(b)) best = std::max(best, c.size());
  return static_cast<int>(best);
}

std::vector<LabelRecord> label_pairs(const std::vector<Graph> &queries,
                                     const std::vector<Graph> &corpus,
                                     std::optional<double> combo_a, SearchBudget budget,
                                     int workers, LabelStats *stats) {
  const int nc = static_cast<int>(corpus.size());
  const int total = static_cast<int>(queries.size()) * nc;
  std::vector<LabelRecord> records(total);
  std::vector<char> unproven(total, 0);
  parallel_for(total, workers, [&](int idx) {
    const Graph &q = queries[idx / nc];
    const Graph &c = corpus[idx % nc];
    PaddedPair pair = build_minimal_pair(q, c);
    McsResult mces = exact_mces(pair, budget);
    McsResult mccs = exact_mccs(pair, budget);
    LabelRecord &rec = records[idx];
    rec.query_id = q.id();
    rec.corpus_id = c.id();
    rec.y_mces = mces.value;
    rec.y_mccs = mccs.value;
    if (combo_a) rec.y_combo = combine_labels(rec.y_mces, rec.y_mccs, *combo_a);
    unproven[idx] = !(mces.proven_optimal && mccs.proven_optimal);
  });
  if (stats) {
    stats->pairs = total;
    stats->unproven = static_cast<int>(std::count(unproven.begin(), unproven.end(), 1));
  }
  return records;
}

}  // namespace mcsret
