//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MCSRET_METRICS_H_
#define MCSRET_METRICS_H_

#include <cstdint>
#include <string>
#include <vector>

namespace mcsret {

// Pair counts over all unordered index pairs of two equal-length vectors.
struct PairCounts {
  std::int64_t pairs = 0;            // n (n - 1) / 2
  std::int64_t tied_labels = 0;      // y_i == y_j
  std::int64_t tied_scores = 0;      // s_i == s_j
  std::int64_t tied_both = 0;
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
};

// O(n log n) counting by sort plus merge inversions.
PairCounts count_pairs(const std::vector<double> &scores, const std::vector<double> &labels);

struct Correlation {
  double value = 0;
  bool defined = true;  // false when the denominator vanishes; value is 0
};

enum class TauVariant { kB, kA };

Correlation kendall_tau(const std::vector<double> &scores, const std::vector<double> &labels,
                        TauVariant variant = TauVariant::kB);
Correlation kendall_tau_b(const std::vector<double> &scores, const std::vector<double> &labels);
Correlation kendall_tau_a(const std::vector<double> &scores, const std::vector<double> &labels);

// Strictly concordant pairs over pairs with distinct labels.
Correlation pair_rank(const std::vector<double> &scores, const std::vector<double> &labels);

double mse(const std::vector<double> &scores, const std::vector<double> &labels);

struct Stat {
  double mean = 0;
  double se = 0;  // sample standard deviation / sqrt(count)
};
Stat mean_and_se(const std::vector<double> &values);

struct QueryMetrics {
  std::string query_id;
  double mse = 0;
  double ktau = 0;
  double pairrank = 0;
  bool ktau_defined = true;
  bool pairrank_defined = true;
};

struct MetricReport {
  Stat mse, ktau, pairrank;
  int undefined_ktau = 0;
  int undefined_pairrank = 0;
  std::vector<QueryMetrics> per_query;
};

// scores[q][c] and labels[q][c] over a shared corpus.
MetricReport evaluate(const std::vector<std::string> &query_ids,
                      const std::vector<std::vector<double>> &scores,
                      const std::vector<std::vector<double>> &labels,
                      TauVariant variant = TauVariant::kB);

// Summary rows `metric<TAB>mean<TAB>se`, a blank line, then per-query rows
// `query_id<TAB>mse<TAB>ktau<TAB>pairrank`.
std::string format_report(const MetricReport &report);

struct RankedItem {
  int rank = 0;  // 1-based
  std::string corpus_id;
  double score = 0;
};

// Descending score; equal scores ordered by corpus id.
std::vector<RankedItem> rank_scores(const std::vector<std::string> &corpus_ids,
                                    const std::vector<double> &scores, int k);
// `query_id<TAB>rank<TAB>corpus_id<TAB>score` per item.
std::string format_ranking(const std::string &query_id, const std::vector<RankedItem> &items);

}  // namespace mcsret

#endif  // MCSRET_METRICS_H_
