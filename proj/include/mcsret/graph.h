//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MCSRET_GRAPH_H_
#define MCSRET_GRAPH_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mcsret {

using Matrix = Eigen::MatrixXd;

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string &what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Edge = std::pair<int, int>;

// Undirected simple graph. Edges are kept canonical: u < v, sorted, unique.
class Graph {
 public:
  Graph() = default;
  // Throws ValidationError on self-loops, out-of-range endpoints or
  // duplicates (in either orientation).
  Graph(std::string id, int num_nodes, std::vector<Edge> edges);

  const std::string &id() const { return id_; }
  int num_nodes() const { return num_nodes_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge> &edges() const { return edges_; }

  bool has_edge(int u, int v) const;
  std::vector<std::vector<int>> adjacency_list() const;
  std::vector<int> degrees() const;

  // N x N symmetric 0/1 adjacency; rows beyond num_nodes() are zero.
  Matrix adjacency(int n) const;

  // Subgraph induced by `nodes`, relabelled in the given order.
  Graph induced(const std::vector<int> &nodes, std::string id) const;

  // Same graph with node u renamed to perm[u].
  Graph relabeled(const std::vector<int> &perm) const;

  Graph with_id(std::string id) const;

  friend bool operator==(const Graph &, const Graph &) = default;

 private:
  std::string id_;
  int num_nodes_ = 0;
  std::vector<Edge> edges_;
};

struct PaddedPair {
  Graph query;
  Graph corpus;
  int n = 0;
  Matrix adj_query;
  Matrix adj_corpus;
};

// Pads both graphs with isolated nodes up to n. Throws SizeError when either
// graph has more than n nodes.
PaddedPair build_padded_pair(const Graph &query, const Graph &corpus, int n);

// Pads to max(|Vq|, |Vc|).
PaddedPair build_minimal_pair(const Graph &query, const Graph &corpus);

struct LabelRecord {
  std::string query_id;
  std::string corpus_id;
  int y_mces = 0;
  int y_mccs = 0;
  std::optional<double> y_combo;

  friend bool operator==(const LabelRecord &, const LabelRecord &) = default;
};

double combine_labels(int y_mces, int y_mccs, double a);

// Dataset file: `id<TAB>num_nodes<TAB>u-v,u-v,...` one graph per line.
std::vector<Graph> parse_dataset(const std::string &text);
std::string format_dataset(const std::vector<Graph> &graphs);
std::vector<Graph> load_dataset(const std::string &path);
void save_dataset(const std::vector<Graph> &graphs, const std::string &path);

// Label file: `query_id<TAB>corpus_id<TAB>y_mces<TAB>y_mccs[<TAB>y_combo]`.
std::vector<LabelRecord> parse_labels(const std::string &text);
std::string format_labels(const std::vector<LabelRecord> &labels);
std::vector<LabelRecord> load_labels(const std::string &path);
void save_labels(const std::vector<LabelRecord> &labels,
                 const std::string &path);

int max_node_count(const std::vector<Graph> &graphs);

// Shortest round-trip decimal form.
std::string format_double(double v);

std::string read_file(const std::string &path);
void write_file(const std::string &path, const std::string &contents);

}  // namespace mcsret

#endif  // MCSRET_GRAPH_H_
