//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mcsret/graph.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <unordered_set>

namespace mcsret {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
bool parse_number(std::string_view s, T &out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> lines_of(const std::string &text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto &l : lines) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  }
  return lines;
}

}  // namespace

Graph::Graph(std::string id, int num_nodes, std::vector<Edge> edges)
    : id_(std::move(id)), num_nodes_(num_nodes) {
  if (num_nodes < 1) throw ValidationError("graph '" + id_ + "': num_nodes must be >= 1");
  for (auto &[u, v] : edges) {
    if (u == v) throw ValidationError("graph '" + id_ + "': self-loop on node " + std::to_string(u));
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
      throw ValidationError("graph '" + id_ + "': endpoint out of range in edge " +
                            std::to_string(u) + "-" + std::to_string(v));
    }
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ValidationError("graph '" + id_ + "': duplicate edge");
  }
  edges_ = std::move(edges);
}

bool Graph::has_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::binary_search(edges_.begin(), edges_.end(), Edge{u, v});
}

std::vector<std::vector<int>> Graph::adjacency_list() const {
  std::vector<std::vector<int>> adj(num_nodes_);
  for (auto [u, v] : edges_) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto &nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
  return adj;
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(num_nodes_, 0);
  for (auto [u, v] : edges_) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

Matrix Graph::adjacency(int n) const {
  if (n < num_nodes_) {
    throw SizeError("graph '" + id_ + "' has " + std::to_string(num_nodes_) +
                    " nodes, cannot pad to " + std::to_string(n));
  }
  Matrix a = Matrix::Zero(n, n);
  for (auto [u, v] : edges_) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  return a;
}

Graph Graph::induced(const std::vector<int> &nodes, std::string id) const {
  std::vector<int> index(num_nodes_, -1);
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) index[nodes[i]] = i;
  std::vector<Edge> edges;
  for (auto [u, v] : edges_) {
    if (index[u] >= 0 && index[v] >= 0) edges.emplace_back(index[u], index[v]);
  }
  return Graph(std::move(id), static_cast<int>(nodes.size()), std::move(edges));
}

Graph Graph::relabeled(const std::vector<int> &perm) const {
  std::vector<Edge> edges;
  edges.reserve(edges_.size());
  for (auto [u, v] : edges_) edges.emplace_back(perm[u], perm[v]);
  return Graph(id_, num_nodes_, std::move(edges));
}

Graph Graph::with_id(std::string id) const {
  Graph g = *this;
  g.id_ = std::move(id);
  return g;
}

PaddedPair build_padded_pair(const Graph &query, const Graph &corpus, int n) {
  if (n < query.num_nodes() || n < corpus.num_nodes()) {
    throw SizeError("padded size " + std::to_string(n) + " smaller than graph size (" +
                    std::to_string(query.num_nodes()) + ", " +
                    std::to_string(corpus.num_nodes()) + ")");
  }
  return PaddedPair{query, corpus, n, query.adjacency(n), corpus.adjacency(n)};
}

PaddedPair build_minimal_pair(const Graph &query, const Graph &corpus) {
  return build_padded_pair(query, corpus,
                           std::max(query.num_nodes(), corpus.num_nodes()));
}

double combine_labels(int y_mces, int y_mccs, double a) {
  return a * y_mccs + (1.0 - a) * y_mces;
}

std::vector<Graph> parse_dataset(const std::string &text) {
  std::vector<Graph> graphs;
  std::unordered_set<std::string> ids;
  int line_no = 0;
  for (std::string_view line : lines_of(text)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(line_no, "expected 3 tab-separated fields, got " +
                                    std::to_string(fields.size()));
    }
    std::string id(fields[0]);
    if (id.empty()) throw ParseError(line_no, "empty graph id");
    int n = 0;
    if (!parse_number(fields[1], n) || n < 1) {
      throw ParseError(line_no, "bad num_nodes '" + std::string(fields[1]) + "'");
    }
    std::vector<Edge> edges;
    if (!fields[2].empty()) {
      for (std::string_view tok : split(fields[2], ',')) {
        auto dash = tok.find('-');
        int u = 0, v = 0;
        if (dash == std::string_view::npos || !parse_number(tok.substr(0, dash), u) ||
            !parse_number(tok.substr(dash + 1), v)) {
          throw ParseError(line_no, "bad edge token '" + std::string(tok) + "'");
        }
        if (u == v) throw ParseError(line_no, "self-loop " + std::string(tok));
        if (u < 0 || v < 0 || u >= n || v >= n) {
          throw ParseError(line_no, "endpoint out of range " + std::string(tok));
        }
        edges.emplace_back(u, v);
      }
    }
    try {
      graphs.emplace_back(id, n, std::move(edges));
    } catch (const ValidationError &e) {
      throw ParseError(line_no, e.what());
    }
    if (!ids.insert(id).second) {
      throw ValidationError("duplicate graph id '" + id + "' at line " +
                            std::to_string(line_no));
    }
  }
  return graphs;
}

std::string format_dataset(const std::vector<Graph> &graphs) {
  std::ostringstream out;
  for (const Graph &g : graphs) {
    out << g.id() << '\t' << g.num_nodes() << '\t';
    bool first = true;
    for (auto [u, v] : g.edges()) {
      if (!first) out << ',';
      out << u << '-' << v;
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

std::vector<Graph> load_dataset(const std::string &path) {
  return parse_dataset(read_file(path));
}

void save_dataset(const std::vector<Graph> &graphs, const std::string &path) {
  write_file(path, format_dataset(graphs));
}

std::vector<LabelRecord> parse_labels(const std::string &text) {
  std::vector<LabelRecord> labels;
  int line_no = 0;
  for (std::string_view line : lines_of(text)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 4 && fields.size() != 5) {
      throw ParseError(line_no, "expected 4 or 5 tab-separated fields");
    }
    LabelRecord rec;
    rec.query_id = std::string(fields[0]);
    rec.corpus_id = std::string(fields[1]);
    if (!parse_number(fields[2], rec.y_mces) || rec.y_mces < 0) {
      throw ParseError(line_no, "bad y_mces '" + std::string(fields[2]) + "'");
    }
    if (!parse_number(fields[3], rec.y_mccs) || rec.y_mccs < 0) {
      throw ParseError(line_no, "bad y_mccs '" + std::string(fields[3]) + "'");
    }
    if (fields.size() == 5) {
      double c = 0;
      if (!parse_number(fields[4], c) || c < 0) {
        throw ParseError(line_no, "bad y_combo '" + std::string(fields[4]) + "'");
      }
      rec.y_combo = c;
    }
    labels.push_back(std::move(rec));
  }
  return labels;
}

std::string format_labels(const std::vector<LabelRecord> &labels) {
  std::ostringstream out;
  for (const LabelRecord &r : labels) {
    out << r.query_id << '\t' << r.corpus_id << '\t' << r.y_mces << '\t' << r.y_mccs;
    if (r.y_combo) out << '\t' << format_double(*r.y_combo);
    out << '\n';
  }
  return out.str();
}

std::vector<LabelRecord> load_labels(const std::string &path) {
  return parse_labels(read_file(path));
}

void save_labels(const std::vector<LabelRecord> &labels, const std::string &path) {
  write_file(path, format_labels(labels));
}

int max_node_count(const std::vector<Graph> &graphs) {
  int n = 0;
  for (const Graph &g : graphs) n = std::max(n, g.num_nodes());
  return n;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string &path, const std::string &contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace mcsret
