//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mcsret/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mcsret/graph.h"

namespace mcsret {

namespace {

void require_same_length(const std::vector<double> &a, const std::vector<double> &b) {
  if (a.size() != b.size()) {
    throw ValidationError("scores and labels differ in length: " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) throw ValidationError("NaN in scores or labels");
  }
}

std::int64_t tied_pairs_in_runs(const std::vector<double> &sorted) {
  std::int64_t total = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    std::int64_t m = static_cast<std::int64_t>(j - i);
    total += m * (m - 1) / 2;
    i = j;
  }
  return total;
}

// Sorts v ascending; returns the number of pairs i < j with v[i] > v[j].
std::int64_t merge_inversions(std::vector<double> &v, std::vector<double> &buf, std::size_t lo,
                              std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = merge_inversions(v, buf, lo, mid) + merge_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return inv;
}

}  // namespace

PairCounts count_pairs(const std::vector<double> &scores, const std::vector<double> &labels) {
  require_same_length(scores, labels);
  const std::size_t n = scores.size();
  PairCounts c;
  c.pairs = static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) - 1) / 2;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (labels[a] != labels[b]) return labels[a] < labels[b];
    return scores[a] < scores[b];
  });
  std::vector<double> y(n), s(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = labels[order[i]];
    s[i] = scores[order[i]];
  }
  c.tied_labels = tied_pairs_in_runs(y);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && y[j] == y[i] && s[j] == s[i]) ++j;
    std::int64_t m = static_cast<std::int64_t>(j - i);
    c.tied_both += m * (m - 1) / 2;
    i = j;
  }
  std::vector<double> buf(n);
  c.discordant = merge_inversions(s, buf, 0, n);
  c.tied_scores = tied_pairs_in_runs(s);
  c.concordant = c.pairs - c.tied_labels - c.tied_scores + c.tied_both - c.discordant;
  return c;
}

Correlation kendall_tau(const std::vector<double> &scores, const std::vector<double> &labels,
                        TauVariant variant) {
  PairCounts c = count_pairs(scores, labels);
  double num = static_cast<double>(c.concordant - c.discordant);
  double den = 0;
  if (variant == TauVariant::kA) {
    den = static_cast<double>(c.pairs);
  } else {
    den = std::sqrt(static_cast<double>(c.pairs - c.tied_labels) *
                    static_cast<double>(c.pairs - c.tied_scores));
  }
  if (den == 0) return {0.0, false};
  return {num / den, true};
}

Correlation kendall_tau_b(const std::vector<double> &scores, const std::vector<double> &labels) {
  return kendall_tau(scores, labels, TauVariant::kB);
}

Correlation kendall_tau_a(const std::vector<double> &scores, const std::vector<double> &labels) {
  return kendall_tau(scores, labels, TauVariant::kA);
}

Correlation pair_rank(const std::vector<double> &scores, const std::vector<double> &labels) {
  PairCounts c = count_pairs(scores, labels);
  std::int64_t possible = c.pairs - c.tied_labels;
  if (possible == 0) return {0.0, false};
  return {static_cast<double>(c.concordant) / static_cast<double>(possible), true};
}

double mse(const std::vector<double> &scores, const std::vector<double> &labels) {
  require_same_length(scores, labels);
  if (scores.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double d = scores[i] - labels[i];
    sum += d * d;
  }
  return sum / static_cast<double>(scores.size());
}

Stat mean_and_se(const std::vector<double> &values) {
  Stat st;
  if (values.empty()) return st;
  const double n = static_cast<double>(values.size());
  st.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return st;
  double ss = 0;
  for (double v : values) ss += (v - st.mean) * (v - st.mean);
  st.se = std::sqrt(ss / (n - 1)) / std::sqrt(n);
  return st;
}

MetricReport evaluate(const std::vector<std::string> &query_ids,
                      const std::vector<std::vector<double>> &scores,
                      const std::vector<std::vector<double>> &labels, TauVariant variant) {
  if (query_ids.size() != scores.size() || scores.size() != labels.size()) {
    throw ValidationError("evaluate: query, score and label counts differ");
  }
  MetricReport r;
  std::vector<double> m, k, p;
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    QueryMetrics qm;
    qm.query_id = query_ids[q];
    qm.mse = mse(scores[q], labels[q]);
    Correlation tau = kendall_tau(scores[q], labels[q], variant);
    Correlation pr = pair_rank(scores[q], labels[q]);
    qm.ktau = tau.value;
    qm.ktau_defined = tau.defined;
    qm.pairrank = pr.value;
    qm.pairrank_defined = pr.defined;
    r.undefined_ktau += !tau.defined;
    r.undefined_pairrank += !pr.defined;
    m.push_back(qm.mse);
    k.push_back(qm.ktau);
    p.push_back(qm.pairrank);
    r.per_query.push_back(std::move(qm));
  }
  r.mse = mean_and_se(m);
  r.ktau = mean_and_se(k);
  r.pairrank = mean_and_se(p);
  return r;
}

std::string format_report(const MetricReport &report) {
  std::ostringstream out;
  out << "mse\t" << format_double(report.mse.mean) << '\t' << format_double(report.mse.se) << '\n';
  out << "ktau\t" << format_double(report.ktau.mean) << '\t' << format_double(report.ktau.se)
      << '\n';
  out << "pairrank\t" << format_double(report.pairrank.mean) << '\t'
      << format_double(report.pairrank.se) << '\n';
  out << "undefined_ktau\t" << report.undefined_ktau << '\n';
  out << "undefined_pairrank\t" << report.undefined_pairrank << '\n';
  out << '\n';
  for (const QueryMetrics &q : report.per_query) {
    out << q.query_id << '\t' << format_double(q.mse) << '\t' << format_double(q.ktau) << '\t'
        << format_double(q.pairrank) << '\n';
  }
  return out.str();
}

std::vector<RankedItem> rank_scores(const std::vector<std::string> &corpus_ids,
                                    const std::vector<double> &scores, int k) {
  if (corpus_ids.size() != scores.size()) {
    throw ValidationError("rank_scores: id and score counts differ");
  }
  if (k < 0) throw ValidationError("rank_scores: k must be >= 0");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return corpus_ids[a] < corpus_ids[b];
  });
  std::size_t take = std::min(order.size(), static_cast<std::size_t>(k));
  std::vector<RankedItem> out;
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({static_cast<int>(i) + 1, corpus_ids[order[i]], scores[order[i]]});
  }
  return out;
}

std::string format_ranking(const std::string &query_id, const std::vector<RankedItem> &items) {
  std::string out;
  for (const RankedItem &it : items) {
    out += query_id + '\t' + std::to_string(it.rank) + '\t' + it.corpus_id + '\t' +
           format_double(it.score) + '\n';
  }
  return out;
}

}  // namespace mcsret
