//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mcsret/graph.h"
#include "mcsret/metrics.h"

namespace mcsret {
namespace {

int sign(double x) { return (x > 0) - (x < 0); }

// Direct O(n^2) enumeration of every unordered pair.
struct Enumerated {
  double tau_a = 0, tau_b = 0, pair_rank = 0;
  bool b_defined = true, rank_defined = true;
};

Enumerated enumerate_pairs(const std::vector<double> &s, const std::vector<double> &y) {
  double c = 0, d = 0, n0 = 0, ty = 0, ts = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      ++n0;
      int prod = sign(s[i] - s[j]) * sign(y[i] - y[j]);
      c += prod > 0;
      d += prod < 0;
      ty += y[i] == y[j];
      ts += s[i] == s[j];
    }
  }
  Enumerated e;
  e.tau_a = n0 > 0 ? (c - d) / n0 : 0;
  double den = std::sqrt((n0 - ty) * (n0 - ts));
  e.b_defined = den > 0;
  e.tau_b = e.b_defined ? (c - d) / den : 0;
  e.rank_defined = n0 - ty > 0;
  e.pair_rank = e.rank_defined ? c / (n0 - ty) : 0;
  return e;
}

TEST(KendallTest, MatchesEnumeration) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    int n = static_cast<int>(rng() % 31);
    std::uniform_int_distribution<int> small(0, 4 + t % 5);
    std::vector<double> s(n), y(n);
    for (int i = 0; i < n; ++i) {
      // Coarse values force plenty of ties on both sides.
      s[i] = small(rng) * 0.5;
      y[i] = small(rng);
    }
    Enumerated e = enumerate_pairs(s, y);
    Correlation b = kendall_tau_b(s, y), a = kendall_tau_a(s, y), pr = pair_rank(s, y);
    EXPECT_NEAR(a.value, e.tau_a, 1e-12) << t;
    EXPECT_NEAR(b.value, e.tau_b, 1e-12) << t;
    EXPECT_EQ(b.defined, e.b_defined) << t;
    EXPECT_NEAR(pr.value, e.pair_rank, 1e-12) << t;
    EXPECT_EQ(pr.defined, e.rank_defined) << t;
  }
}

TEST(KendallTest, CountsMatchEnumeration) {
  std::vector<double> s = {1, 1, 2, 3, 3}, y = {2, 1, 1, 3, 3};
  PairCounts c = count_pairs(s, y);
  EXPECT_EQ(c.pairs, 10);
  EXPECT_EQ(c.tied_labels, 2);
  EXPECT_EQ(c.tied_scores, 2);
  EXPECT_EQ(c.tied_both, 1);
  EXPECT_EQ(c.concordant, 6);
  EXPECT_EQ(c.discordant, 1);
}

TEST(KendallTest, Examples) {
  std::vector<double> y = {1, 2, 3};
  EXPECT_NEAR(pair_rank({1, 3, 2}, y).value, 2.0 / 3, 1e-15);
  EXPECT_NEAR(kendall_tau_b({1, 3, 2}, y).value, 1.0 / 3, 1e-15);
  EXPECT_EQ(kendall_tau_b({1, 2, 3}, y).value, 1);
  EXPECT_EQ(kendall_tau_b({3, 2, 1}, y).value, -1);
  Correlation flat = kendall_tau_b({5, 5, 5}, y);
  EXPECT_EQ(flat.value, 0);
  EXPECT_FALSE(flat.defined);
  EXPECT_EQ(pair_rank({5, 5, 5}, y).value, 0);
  EXPECT_FALSE(pair_rank({1, 2, 3}, {4, 4, 4}).defined);
  EXPECT_FALSE(kendall_tau_b({}, {}).defined);
}

TEST(KendallTest, MonotoneTransformInvariant) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> s(40), y(40);
  for (int i = 0; i < 40; ++i) {
    s[i] = g(rng);
    y[i] = std::round(g(rng) * 3);
  }
  std::vector<double> t(40);
  for (int i = 0; i < 40; ++i) t[i] = std::exp(2 * s[i]) + 7;
  EXPECT_NEAR(kendall_tau_b(s, y).value, kendall_tau_b(t, y).value, 1e-15);
  EXPECT_NEAR(pair_rank(s, y).value, pair_rank(t, y).value, 1e-15);
}

TEST(KendallTest, LengthMismatch) {
  EXPECT_THROW(kendall_tau_b({1, 2}, {1}), ValidationError);
  EXPECT_THROW(mse({1, 2}, {1}), ValidationError);
}

TEST(MseTest, Examples) {
  EXPECT_EQ(mse({1, 2, 3}, {1, 2, 3}), 0);
  EXPECT_DOUBLE_EQ(mse({0, 0}, {1, 3}), 5);
  EXPECT_EQ(mse({}, {}), 0);
}

TEST(StatTest, MeanAndStandardError) {
  Stat s = mean_and_se({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.se, std::sqrt(5.0 / 3) / 2, 1e-15);
  EXPECT_EQ(mean_and_se({7}).se, 0);
}

TEST(EvaluateTest, UndefinedQueriesCountAsZero) {
  std::vector<std::vector<double>> scores = {{1, 2, 3}, {1, 1, 1}};
  std::vector<std::vector<double>> labels = {{1, 2, 3}, {1, 2, 3}};
  MetricReport r = evaluate({"a", "b"}, scores, labels);
  EXPECT_EQ(r.undefined_ktau, 1);
  EXPECT_EQ(r.undefined_pairrank, 0);
  EXPECT_DOUBLE_EQ(r.ktau.mean, 0.5);
  EXPECT_DOUBLE_EQ(r.mse.mean, 5.0 / 6);
  std::string text = format_report(r);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "mse\t" + format_double(r.mse.mean) + "\t" + format_double(r.mse.se));
  EXPECT_THROW(evaluate({"a"}, scores, labels), ValidationError);
}

TEST(RankTest, TieBreakById) {
  auto items = rank_scores({"c2", "c1", "c3", "c0"}, {0.5, 0.5, 0.9, 0.1}, 3);
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[0].corpus_id, "c3");
  EXPECT_EQ(items[1].corpus_id, "c1");
  EXPECT_EQ(items[2].corpus_id, "c2");
  EXPECT_EQ(items[2].rank, 3);
  EXPECT_EQ(format_ranking("q", {items[0]}), "q\t1\tc3\t0.9\n");
  EXPECT_EQ(rank_scores({"a"}, {1}, 10).size(), 1u);
  EXPECT_THROW(rank_scores({"a"}, {1}, -1), ValidationError);
}

}  // namespace
}  // namespace mcsret
