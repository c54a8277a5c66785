//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "mcsret/graph.h"
#include "mcsret/verify.h"

namespace mcsret {
namespace {

Graph path(int n, const std::string &id = "p") {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph(id, n, e);
}

TEST(GraphTest, EdgesAreCanonical) {
  Graph g("g", 4, {{3, 1}, {0, 2}, {1, 0}});
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1}, {0, 2}, {1, 3}}));
  EXPECT_TRUE(g.has_edge(3, 1));
  EXPECT_FALSE(g.has_edge(2, 3));
}

TEST(GraphTest, RejectsInvalidEdges) {
  EXPECT_THROW(Graph("g", 3, {{1, 1}}), ValidationError);
  EXPECT_THROW(Graph("g", 3, {{0, 3}}), ValidationError);
  EXPECT_THROW(Graph("g", 3, {{0, 1}, {1, 0}}), ValidationError);
}

TEST(GraphTest, PaddingAddsIsolatedNodes) {
  Graph tri("t", 3, {{0, 1}, {1, 2}, {0, 2}});
  Graph edge("e", 2, {{0, 1}});
  PaddedPair p = build_padded_pair(tri, edge, 3);
  ASSERT_EQ(p.adj_corpus.rows(), 3);
  EXPECT_EQ(p.adj_corpus.sum(), 2);
  EXPECT_EQ(p.adj_corpus(0, 1), 1);
  EXPECT_EQ(p.adj_corpus(1, 0), 1);
  EXPECT_EQ(p.adj_corpus.row(2).sum(), 0);
}

TEST(GraphTest, SameGraphSameAdjacency) {
  Graph g = path(5);
  PaddedPair p = build_padded_pair(g, g, 5);
  EXPECT_EQ(p.adj_query, p.adj_corpus);
}

TEST(GraphTest, PathAndStarRowSums) {
  Graph star("s", 4, {{0, 1}, {0, 2}, {0, 3}});
  PaddedPair p = build_padded_pair(path(4), star, 5);
  Eigen::VectorXd rows = p.adj_query.rowwise().sum();
  EXPECT_EQ(rows, (Eigen::VectorXd(5) << 1, 2, 2, 1, 0).finished());
  EXPECT_EQ(p.adj_corpus.rows(), 5);
}

TEST(GraphTest, PaddingTooSmall) {
  EXPECT_THROW(build_padded_pair(path(4), path(2), 3), SizeError);
}

TEST(GraphTest, AdjacencyInvariants) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    Graph q = random_graph(1 + t % 9, 0.4, rng, "q");
    Graph c = random_graph(1 + (t * 7) % 9, 0.4, rng, "c");
    int n = std::max(q.num_nodes(), c.num_nodes()) + t % 3;
    PaddedPair p = build_padded_pair(q, c, n);
    EXPECT_EQ(p.adj_query.sum(), 2 * q.num_edges());
    EXPECT_EQ(p.adj_query, p.adj_query.transpose());
    EXPECT_EQ(p.adj_query.diagonal().sum(), 0);
    PaddedPair again = build_padded_pair(p.query, p.corpus, n);
    EXPECT_EQ(again.adj_query, p.adj_query);
    EXPECT_EQ(again.adj_corpus, p.adj_corpus);
  }
}

TEST(GraphTest, RelabelAndInduced) {
  Graph g = path(4);
  Graph r = g.relabeled({3, 2, 1, 0});
  EXPECT_EQ(r.edges(), g.edges());
  Graph s = g.relabeled({1, 0, 2, 3});
  EXPECT_TRUE(s.has_edge(1, 0));
  EXPECT_TRUE(s.has_edge(0, 2));
  Graph sub = g.induced({2, 1}, "sub");
  EXPECT_EQ(sub.num_nodes(), 2);
  EXPECT_TRUE(sub.has_edge(0, 1));
}

TEST(DatasetTest, RoundTrip) {
  std::mt19937_64 rng(11);
  std::vector<Graph> graphs;
  for (int i = 0; i < 100; ++i) {
    graphs.push_back(random_graph(1 + i % 12, 0.3, rng, "g" + std::to_string(i)));
  }
  auto path = std::filesystem::temp_directory_path() / "mcsret_roundtrip.tsv";
  save_dataset(graphs, path.string());
  EXPECT_EQ(load_dataset(path.string()), graphs);
  std::filesystem::remove(path);
}

TEST(DatasetTest, EmptyEdgeField) {
  auto g = parse_dataset("a\t3\t\n");
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].num_edges(), 0);
  EXPECT_EQ(format_dataset(g), "a\t3\t\n");
}

TEST(DatasetTest, SelfLoopReportsLine) {
  try {
    parse_dataset("a\t4\t0-1\nb\t4\t3-3\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("self-loop"), std::string::npos);
  }
}

TEST(DatasetTest, EndpointOutOfRange) {
  try {
    parse_dataset("a\t4\t0-4\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_NE(std::string(e.what()).find("endpoint out of range"), std::string::npos);
  }
}

TEST(DatasetTest, MalformedRecords) {
  EXPECT_THROW(parse_dataset("a\t4\n"), ParseError);
  EXPECT_THROW(parse_dataset("a\tx\t\n"), ParseError);
  EXPECT_THROW(parse_dataset("a\t3\t0_1\n"), ParseError);
  EXPECT_THROW(parse_dataset("a\t0\t\n"), ParseError);
}

TEST(DatasetTest, DuplicateId) {
  EXPECT_THROW(parse_dataset("a\t2\t0-1\na\t3\t\n"), ValidationError);
}

TEST(DatasetTest, MissingFile) {
  EXPECT_THROW(load_dataset("/nonexistent/mcsret/file.tsv"), IoError);
}

TEST(LabelsTest, RoundTripWithAndWithoutCombo) {
  std::vector<LabelRecord> labels = {{"q0", "c0", 2, 3, 2.3}, {"q0", "c1", 0, 1, std::nullopt}};
  EXPECT_EQ(parse_labels(format_labels(labels)), labels);
}

TEST(LabelsTest, ComboArithmetic) {
  EXPECT_DOUBLE_EQ(combine_labels(2, 3, 0.3), 0.3 * 3 + 0.7 * 2);
  EXPECT_EQ(combine_labels(4, 7, 0.0), 4);
  EXPECT_EQ(combine_labels(4, 7, 1.0), 7);
}

TEST(FormatTest, DoubleRoundTrip) {
  for (double v : {0.1, 1.0 / 3, 2.3, 1e-300, -7.25, 123456789.125}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

}  // namespace
}  // namespace mcsret
