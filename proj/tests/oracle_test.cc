//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <queue>
#include <random>

#include <gtest/gtest.h>

#include "mcsret/oracle.h"
#include "mcsret/verify.h"

namespace mcsret {
namespace {

Graph complete(int n) {
  std::vector<Edge> e;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) e.emplace_back(u, v);
  }
  return Graph("k", n, e);
}

Graph path(int n) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph("p", n, e);
}

// Plain BFS component sizes, written independently of the oracle module.
int bfs_largest(const Matrix &b) {
  const int n = static_cast<int>(b.rows());
  std::vector<int> seen(n, 0);
  int best = 0;
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::queue<int> q;
    q.push(s);
    seen[s] = 1;
    int size = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      ++size;
      for (int v = 0; v < n; ++v) {
        if (b(u, v) != 0 && !seen[v]) {
          seen[v] = 1;
          q.push(v);
        }
      }
    }
    best = std::max(best, size);
  }
  return best;
}

TEST(MccsTest, Examples) {
  Graph g = path(5);
  EXPECT_EQ(exact_mccs(build_minimal_pair(g, g)).value, 5);
  EXPECT_EQ(exact_mccs(build_minimal_pair(complete(3), path(4))).value, 3);
  Graph two("two", 4, {{0, 1}, {2, 3}});
  EXPECT_EQ(exact_mccs(build_minimal_pair(two, complete(3))).value, 2);
}

TEST(MccsTest, NoCommonEdge) {
  Graph e("e", 2, {{0, 1}});
  Graph iso("i", 2, {});
  EXPECT_EQ(exact_mccs(build_minimal_pair(e, iso)).value, 1);
  EXPECT_EQ(brute_force_mccs(build_minimal_pair(e, iso)).value, 1);
  EXPECT_EQ(exact_mccs(build_minimal_pair(iso, iso)).value, 1);
}

TEST(McesTest, Examples) {
  Graph g = path(6);
  EXPECT_EQ(exact_mces(build_minimal_pair(g, g)).value, 5);
  EXPECT_EQ(exact_mces(build_minimal_pair(complete(3), path(3))).value, 2);
  EXPECT_EQ(brute_force_mces(build_minimal_pair(complete(3), path(3))).value, 2);
  Graph e("e", 2, {{0, 1}});
  Graph iso("i", 2, {});
  EXPECT_EQ(exact_mces(build_minimal_pair(e, iso)).value, 0);
  EXPECT_EQ(brute_force_mces(build_minimal_pair(iso, iso)).value, 0);
}

TEST(BruteForceTest, SelfPair) {
  Graph g("g", 6, {{0, 1}, {1, 2}, {3, 4}});
  PaddedPair p = build_minimal_pair(g, g);
  EXPECT_EQ(brute_force_mces(p).value, 3);
  EXPECT_EQ(brute_force_mccs(p).value, 3);
}

TEST(BruteForceTest, Refuses) {
  EXPECT_THROW(brute_force_mces(build_minimal_pair(path(8), path(3))), RefusedError);
}

TEST(OracleTest, AgreesWithBruteForce) {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 120; ++t) {
    Graph q = random_graph(1 + t % 6, 0.5, rng, "q");
    Graph c = random_graph(1 + (t / 6) % 6, 0.5, rng, "c");
    PaddedPair p = build_minimal_pair(q, c);
    McsResult em = exact_mces(p), ec = exact_mccs(p);
    ASSERT_EQ(em.value, brute_force_mces(p).value) << t;
    ASSERT_EQ(ec.value, brute_force_mccs(p).value) << t;
    EXPECT_TRUE(em.proven_optimal);
    EXPECT_EQ(common_edge_count(q, c, em.mapping), em.value);
    EXPECT_EQ(common_lcc_size(q, c, ec.mapping), ec.value);
    EXPECT_LE(em.value, std::min(q.num_edges(), c.num_edges()));
    EXPECT_LE(ec.value, std::min(q.num_nodes(), c.num_nodes()));
  }
}

TEST(OracleTest, RelabelInvariant) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 20; ++t) {
    Graph q = random_graph(7, 0.4, rng, "q");
    Graph c = random_graph(8, 0.4, rng, "c");
    Graph q2 = q.relabeled(random_permutation(7, rng));
    Graph c2 = c.relabeled(random_permutation(8, rng));
    EXPECT_EQ(exact_mces(build_minimal_pair(q, c)).value,
              exact_mces(build_minimal_pair(q2, c2)).value);
    EXPECT_EQ(exact_mccs(build_minimal_pair(q, c)).value,
              exact_mccs(build_minimal_pair(q2, c2)).value);
  }
}

TEST(OracleTest, TinyBudgetIsNotProven) {
  std::mt19937_64 rng(41);
  Graph q = random_graph(10, 0.5, rng, "q"), c = random_graph(10, 0.5, rng, "c");
  PaddedPair p = build_minimal_pair(q, c);
  McsResult r = exact_mces(p, SearchBudget{1});
  EXPECT_FALSE(r.proven_optimal);
  EXPECT_LE(r.value, exact_mces(p).value);
}

TEST(GossipTest, Examples) {
  EXPECT_EQ(exact_gossip(complete(3).adjacency(3), 3), 3);
  EXPECT_EQ(exact_gossip(Graph("g", 3, {{0, 1}}).adjacency(3), 3), 2);
  Graph two("g", 6, {{0, 1}, {1, 2}, {2, 3}, {4, 5}});
  EXPECT_EQ(exact_gossip(two.adjacency(6), 6), 4);
  EXPECT_EQ(bfs_largest(two.adjacency(6)), 4);
}

TEST(GossipTest, MatchesBfs) {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 100; ++t) {
    int n = 1 + t % 12;
    Matrix b = random_graph(n, 0.05 + 0.004 * t, rng).adjacency(n);
    EXPECT_EQ(exact_gossip(b, n), bfs_largest(b));
    EXPECT_EQ(largest_cc(b), bfs_largest(b));
  }
}

TEST(GossipTest, MatrixPowerCountsAgree) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 30; ++t) {
    int n = 2 + t % 6;
    Matrix b = random_graph(n, 0.3, rng).adjacency(n);
    Matrix x = gossip_matrix_power(b, n);
    Matrix ref = Matrix::Identity(n, n);
    Matrix step = b + Matrix::Identity(n, n);
    for (int i = 0; i < n; ++i) ref = ref * step;
    EXPECT_EQ(x, ref);
    int best = 0;
    for (int u = 0; u < n; ++u) best = std::max(best, static_cast<int>((x.col(u).array() != 0).count()));
    EXPECT_EQ(best, exact_gossip(b, n));
  }
}

TEST(GossipTest, RejectsBadInput) {
  Matrix b = Matrix::Zero(2, 2);
  b(0, 1) = 1;
  EXPECT_THROW(exact_gossip(b, 2), ValidationError);
  b(1, 0) = 2;
  b(0, 1) = 2;
  EXPECT_THROW(exact_gossip(b, 2), ValidationError);
}

TEST(ComponentsTest, Examples) {
  EXPECT_EQ(largest_cc(Matrix::Zero(4, 4)), 1);
  EXPECT_EQ(largest_cc(path(5).adjacency(5)), 5);
  EXPECT_EQ(connected_components(Graph("g", 4, {{0, 2}}).adjacency(4)).size(), 3u);
}

TEST(LabelPairsTest, ComboAndOrder) {
  std::vector<Graph> qs = {complete(3).with_id("q0"), path(4).with_id("q1")};
  std::vector<Graph> cs = {path(3).with_id("c0"), complete(4).with_id("c1"),
                           Graph("c2", 2, {})};
  auto labels = label_pairs(qs, cs, 0.3, {}, 2);
  ASSERT_EQ(labels.size(), 6u);
  EXPECT_EQ(labels[0].query_id, "q0");
  EXPECT_EQ(labels[0].corpus_id, "c0");
  EXPECT_EQ(labels[5].query_id, "q1");
  EXPECT_EQ(labels[5].corpus_id, "c2");
  for (const auto &r : labels) {
    ASSERT_TRUE(r.y_combo.has_value());
    EXPECT_DOUBLE_EQ(*r.y_combo, combine_labels(r.y_mces, r.y_mccs, 0.3));
  }
  EXPECT_EQ(labels[0].y_mces, 2);
  EXPECT_EQ(labels[1].y_mces, 3);
  EXPECT_FALSE(label_pairs(qs, cs, std::nullopt)[0].y_combo.has_value());
  EXPECT_EQ(label_pairs(qs, cs, std::nullopt, {}, 1), label_pairs(qs, cs, std::nullopt, {}, 3));
}

TEST(LabelPairsTest, MatchesBruteForce) {
  std::mt19937_64 rng(37);
  std::vector<Graph> qs, cs;
  for (int i = 0; i < 4; ++i) qs.push_back(random_graph(2 + i, 0.5, rng, "q" + std::to_string(i)));
  for (int i = 0; i < 5; ++i) cs.push_back(random_graph(6 - i, 0.5, rng, "c" + std::to_string(i)));
  auto labels = label_pairs(qs, cs, std::nullopt);
  for (const auto &r : labels) {
    const Graph &q = qs[r.query_id[1] - '0'];
    const Graph &c = cs[r.corpus_id[1] - '0'];
    PaddedPair p = build_minimal_pair(q, c);
    EXPECT_EQ(r.y_mces, brute_force_mces(p).value);
    EXPECT_EQ(r.y_mccs, brute_force_mccs(p).value);
  }
}

}  // namespace
}  // namespace mcsret
