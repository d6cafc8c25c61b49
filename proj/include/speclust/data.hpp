#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "speclust/error.hpp"

namespace speclust {

/// Dense real matrix, one data point per row.
using DataMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline void require_finite(const DataMatrix& x, const char* what) {
  if (x.rows() < 1 || x.cols() < 1)
    throw ValidationError(std::string(what) + ": empty matrix");
  if (!x.allFinite()) throw ValidationError(std::string(what) + ": non-finite value");
}

struct Edge {
  int u;
  int v;
  double weight;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Sparse weighted undirected graph with dense node indices 0..n-1.
///
/// Adjacency is kept in compressed rows with sorted neighbor indices, so
/// iteration order is deterministic. `node_ids` holds the external identifier
/// of each dense index.
class Graph {
public:
  Graph() = default;

  /// Builds from canonical edges. Self-loops are rejected here; parsers drop
  /// them before construction.
  Graph(int n_nodes, std::vector<Edge> edges, std::vector<std::string> node_ids = {},
        bool weighted = false)
      : n_(n_nodes), weighted_(weighted), node_ids_(std::move(node_ids)) {
    if (n_ < 0) throw ValidationError("Graph: negative node count");
    if (node_ids_.empty()) {
      node_ids_.reserve(static_cast<std::size_t>(n_));
      for (int i = 0; i < n_; ++i) node_ids_.push_back(std::to_string(i));
    }
    if (static_cast<int>(node_ids_.size()) != n_)
      throw ValidationError("Graph: node_ids size mismatch");

    std::map<std::pair<int, int>, double> unique;
    for (const auto& e : edges) {
      if (e.u < 0 || e.v < 0 || e.u >= n_ || e.v >= n_)
        throw ValidationError("Graph: edge endpoint out of range");
      if (e.u == e.v) throw ValidationError("Graph: self-loop");
      if (!(e.weight > 0.0) || !std::isfinite(e.weight))
        throw ValidationError("Graph: edge weights must be positive and finite");
      unique[{std::min(e.u, e.v), std::max(e.u, e.v)}] = e.weight;
    }

    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n_));
    edges_.reserve(unique.size());
    for (const auto& [key, w] : unique) {
      edges_.push_back({key.first, key.second, w});
      rows[static_cast<std::size_t>(key.first)].push_back({key.second, w});
      rows[static_cast<std::size_t>(key.second)].push_back({key.first, w});
    }
    offsets_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (int i = 0; i < n_; ++i) {
      auto& r = rows[static_cast<std::size_t>(i)];
      std::sort(r.begin(), r.end());
      offsets_[static_cast<std::size_t>(i) + 1] =
          offsets_[static_cast<std::size_t>(i)] + r.size();
      for (const auto& [j, w] : r) {
        nbr_.push_back(j);
        wts_.push_back(w);
      }
    }
  }

  int n_nodes() const noexcept { return n_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  bool weighted() const noexcept { return weighted_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::string>& node_ids() const noexcept { return node_ids_; }

  std::pair<const int*, const int*> neighbors(int i) const {
    const auto b = offsets_[static_cast<std::size_t>(i)];
    const auto e = offsets_[static_cast<std::size_t>(i) + 1];
    return {nbr_.data() + b, nbr_.data() + e};
  }

  const double* neighbor_weights(int i) const {
    return wts_.data() + offsets_[static_cast<std::size_t>(i)];
  }

  int degree(int i) const {
    return static_cast<int>(offsets_[static_cast<std::size_t>(i) + 1] -
                            offsets_[static_cast<std::size_t>(i)]);
  }

  double weighted_degree(int i) const {
    double d = 0.0;
    const double* w = neighbor_weights(i);
    for (int j = 0; j < degree(i); ++j) d += w[j];
    return d;
  }

  double weight(int i, int j) const {
    auto [b, e] = neighbors(i);
    auto it = std::lower_bound(b, e, j);
    if (it == e || *it != j) return 0.0;
    return neighbor_weights(i)[it - b];
  }

  std::optional<int> index_of(const std::string& id) const {
    if (id_index_.empty() && n_ > 0) {
      for (int i = 0; i < n_; ++i) id_index_.emplace(node_ids_[static_cast<std::size_t>(i)], i);
    }
    auto it = id_index_.find(id);
    if (it == id_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Subgraph induced by `nodes`; node i of the result is nodes[i].
  Graph induced(const std::vector<int>& nodes) const {
    std::vector<int> pos(static_cast<std::size_t>(n_), -1);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i] < 0 || nodes[i] >= n_) throw ValidationError("induced: node out of range");
      pos[static_cast<std::size_t>(nodes[i])] = static_cast<int>(i);
      ids.push_back(node_ids_[static_cast<std::size_t>(nodes[i])]);
    }
    std::vector<Edge> sub;
    for (const auto& e : edges_) {
      const int a = pos[static_cast<std::size_t>(e.u)];
      const int b = pos[static_cast<std::size_t>(e.v)];
      if (a >= 0 && b >= 0) sub.push_back({a, b, e.weight});
    }
    return Graph(static_cast<int>(nodes.size()), std::move(sub), std::move(ids), weighted_);
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_ && a.node_ids_ == b.node_ids_;
  }

private:
  int n_ = 0;
  bool weighted_ = false;
  std::vector<Edge> edges_;
  std::vector<std::string> node_ids_;
  std::vector<std::size_t> offsets_{0};
  std::vector<int> nbr_;
  std::vector<double> wts_;
  mutable std::unordered_map<std::string, int> id_index_;
};

/// Hard assignment of points to clusters 0..k-1. Clusters may be empty.
class Partition {
public:
  Partition() = default;

  Partition(std::vector<int> labels, int k) : labels_(std::move(labels)), k_(k) {
    if (k_ < 1) throw ValidationError("Partition: k must be >= 1");
    for (int l : labels_)
      if (l < 0 || l >= k_) throw ValidationError("Partition: label out of range");
  }

  /// k inferred as max label + 1.
  static Partition from_labels(std::vector<int> labels) {
    int k = 1;
    for (int l : labels) k = std::max(k, l + 1);
    return Partition(std::move(labels), k);
  }

  int k() const noexcept { return k_; }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<int>& labels() const noexcept { return labels_; }
  int operator[](std::size_t i) const { return labels_[i]; }

  std::vector<int> counts() const {
    std::vector<int> c(static_cast<std::size_t>(k_), 0);
    for (int l : labels_) ++c[static_cast<std::size_t>(l)];
    return c;
  }

  int nonempty_clusters() const {
    auto c = counts();
    return static_cast<int>(std::count_if(c.begin(), c.end(), [](int n) { return n > 0; }));
  }

  /// Relabels by order of first appearance and drops empty clusters.
  Partition compacted() const {
    std::vector<int> map(static_cast<std::size_t>(k_), -1);
    std::vector<int> out(labels_.size());
    int next = 0;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      int& m = map[static_cast<std::size_t>(labels_[i])];
      if (m < 0) m = next++;
      out[i] = m;
    }
    return Partition(std::move(out), std::max(next, 1));
  }

  Partition subset(const std::vector<int>& idx) const {
    std::vector<int> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(labels_.at(static_cast<std::size_t>(i)));
    return Partition(std::move(out), k_);
  }

  /// N x k 0/1 cluster indicator matrix.
  Eigen::MatrixXd indicator() const {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels_.size()), k_);
    for (std::size_t i = 0; i < labels_.size(); ++i) x(static_cast<Eigen::Index>(i), labels_[i]) = 1.0;
    return x;
  }

  friend bool operator==(const Partition&, const Partition&) = default;

private:
  std::vector<int> labels_;
  int k_ = 1;
};

struct LabeledDataset {
  DataMatrix data;
  Partition truth;
};

/// One time step of an evolving dataset. Exactly one of `graph` / `points`
/// carries the payload; `ids` are external node (or object) identifiers
/// aligned with graph indices or matrix rows.
struct Snapshot {
  double timestamp = 0.0;
  std::optional<Graph> graph;
  std::optional<DataMatrix> points;
  std::vector<std::string> ids;
  Partition truth;
};

struct SnapshotSequence {
  std::vector<Snapshot> steps;

  void validate() const {
    for (std::size_t t = 1; t < steps.size(); ++t)
      if (!(steps[t].timestamp > steps[t - 1].timestamp))
        throw ValidationError("SnapshotSequence: timestamps must increase strictly");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(const std::string& s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

struct EdgeListResult {
  Graph graph;
  std::vector<std::string> warnings;
};

/// Parses "u v" / "u v w" lines. '#' starts a comment. Duplicate edges keep
/// the last weight; self-loops are dropped with a warning. Node ids are
/// reindexed densely: numerically sorted when every id is an integer,
/// lexicographically otherwise.
inline EdgeListResult load_edge_list_with_warnings(std::istream& in, bool weighted) {
  struct Raw {
    std::string u, v;
    double w;
  };
  std::vector<Raw> raw;
  std::vector<std::string> warnings;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 2 || tok.size() > 3)
      throw ValidationError("load_edge_list: malformed line " + std::to_string(lineno));
    double w = 1.0;
    if (tok.size() == 3) {
      auto pw = detail::parse_double(tok[2]);
      if (!pw || !std::isfinite(*pw))
        throw ValidationError("load_edge_list: malformed weight on line " + std::to_string(lineno));
      if (*pw < 0.0)
        throw ValidationError("load_edge_list: negative weight on line " + std::to_string(lineno));
      if (weighted) w = *pw;
    }
    if (tok[0] == tok[1]) {
      warnings.push_back("line " + std::to_string(lineno) + ": self-loop on " + tok[0] + " dropped");
      continue;
    }
    raw.push_back({tok[0], tok[1], w});
  }

  std::vector<std::string> ids;
  {
    std::map<std::string, int> seen;
    for (const auto& r : raw) {
      seen.emplace(r.u, 0);
      seen.emplace(r.v, 0);
    }
    for (const auto& [id, _] : seen) ids.push_back(id);
    const bool numeric = std::all_of(ids.begin(), ids.end(),
                                     [](const std::string& s) { return detail::parse_int(s).has_value(); });
    if (numeric)
      std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
        return *detail::parse_int(a) < *detail::parse_int(b);
      });
  }
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], static_cast<int>(i));

  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const auto& r : raw) {
    if (r.w == 0.0) {
      warnings.push_back("zero-weight edge " + r.u + " " + r.v + " dropped");
      continue;
    }
    edges.push_back({index.at(r.u), index.at(r.v), r.w});
  }
  const int n = static_cast<int>(ids.size());
  return {Graph(n, std::move(edges), std::move(ids), weighted), std::move(warnings)};
}

inline Graph load_edge_list(std::istream& in, bool weighted) {
  return load_edge_list_with_warnings(in, weighted).graph;
}

inline Graph load_edge_list(const std::string& text, bool weighted) {
  std::istringstream in(text);
  return load_edge_list(in, weighted);
}

inline void write_edge_list(std::ostream& out, const Graph& g) {
  const auto& ids = g.node_ids();
  for (const auto& e : g.edges()) {
    out << ids[static_cast<std::size_t>(e.u)] << ' ' << ids[static_cast<std::size_t>(e.v)];
    if (g.weighted()) out << ' ' << detail::format_double(e.weight);
    out << '\n';
  }
}

/// Full weighted adjacency rows of the given nodes.
inline DataMatrix adjacency_rows(const Graph& g, const std::vector<int>& ids) {
  DataMatrix out = DataMatrix::Zero(static_cast<Eigen::Index>(ids.size()), g.n_nodes());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const int i = ids[r];
    if (i < 0 || i >= g.n_nodes()) throw ValidationError("adjacency_rows: id out of range");
    auto [b, e] = g.neighbors(i);
    const double* w = g.neighbor_weights(i);
    for (auto it = b; it != e; ++it) out(static_cast<Eigen::Index>(r), *it) = w[it - b];
  }
  return out;
}

inline DataMatrix adjacency_matrix(const Graph& g) {
  std::vector<int> all(static_cast<std::size_t>(g.n_nodes()));
  for (int i = 0; i < g.n_nodes(); ++i) all[static_cast<std::size_t>(i)] = i;
  return adjacency_rows(g, all);
}

/// Row t of the result concatenates input rows t..t+window-1.
inline DataMatrix window_concat(const DataMatrix& series, int window) {
  if (window < 1) throw ValidationError("window_concat: window must be >= 1");
  if (window > series.rows()) throw ValidationError("window_concat: window exceeds row count");
  const Eigen::Index rows = series.rows() - window + 1;
  const Eigen::Index d = series.cols();
  DataMatrix out(rows, d * window);
  for (Eigen::Index t = 0; t < rows; ++t)
    for (int w = 0; w < window; ++w) out.block(t, w * d, 1, d) = series.row(t + w);
  return out;
}

/// CSV with a header row; every field must parse as a finite real.
inline DataMatrix read_csv(std::istream& in, std::vector<std::string>* header = nullptr) {
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  int lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(detail::trim(f));
    if (first) {
      first = false;
      if (header) *header = fields;
      width = fields.size();
      continue;
    }
    if (fields.size() != width)
      throw ValidationError("read_csv: wrong field count on line " + std::to_string(lineno));
    std::vector<double> r;
    for (const auto& f : fields) {
      auto v = detail::parse_double(f);
      if (!v || !std::isfinite(*v))
        throw ValidationError("read_csv: bad value on line " + std::to_string(lineno));
      r.push_back(*v);
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ValidationError("read_csv: no data rows");
  DataMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

inline void write_csv(std::ostream& out, const DataMatrix& m, const std::vector<std::string>& header = {}) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (j) out << ',';
    if (header.empty())
      out << 'x' << j;
    else
      out << header.at(static_cast<std::size_t>(j));
  }
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
}

inline std::vector<int> read_labels(std::istream& in) {
  std::vector<int> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto v = detail::parse_int(line);
    if (!v || *v < 0) throw ValidationError("read_labels: bad label on line " + std::to_string(lineno));
    labels.push_back(static_cast<int>(*v));
  }
  return labels;
}

inline void write_labels(std::ostream& out, const Partition& p) {
  for (int l : p.labels()) out << l << '\n';
}

}  // namespace speclust
