#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "speclust/data.hpp"
#include "speclust/error.hpp"

namespace speclust {

struct LabeledGraph {
  Graph graph;
  Partition truth;
};

/// Rows are emitted component by component; labels are component indices.
inline LabeledDataset gen_gaussian_mixture(const std::vector<Eigen::VectorXd>& means,
                                           const std::vector<Eigen::MatrixXd>& covariances,
                                           const std::vector<int>& counts, std::uint64_t seed) {
  if (means.empty() || means.size() != covariances.size() || means.size() != counts.size())
    throw ValidationError("gen_gaussian_mixture: components disagree in number");
  const Eigen::Index d = means.front().size();
  int total = 0;
  std::vector<Eigen::MatrixXd> factors;
  for (std::size_t c = 0; c < means.size(); ++c) {
    if (means[c].size() != d || covariances[c].rows() != d || covariances[c].cols() != d)
      throw ValidationError("gen_gaussian_mixture: dimension mismatch");
    if (counts[c] < 1) throw ValidationError("gen_gaussian_mixture: counts must be >= 1");
    Eigen::LLT<Eigen::MatrixXd> llt(covariances[c]);
    if (llt.info() != Eigen::Success || !covariances[c].isApprox(covariances[c].transpose()))
      throw ValidationError("gen_gaussian_mixture: covariance " + std::to_string(c) + " is not positive definite");
    factors.push_back(llt.matrixL());
    total += counts[c];
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LabeledDataset out{DataMatrix(total, d), Partition()};
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(total));
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < means.size(); ++c)
    for (int i = 0; i < counts[c]; ++i) {
      Eigen::VectorXd z(d);
      for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(rng);
      out.data.row(row++) = (means[c] + factors[c] * z).transpose();
      labels.push_back(static_cast<int>(c));
    }
  out.truth = Partition(std::move(labels), static_cast<int>(means.size()));
  return out;
}

enum class Overlap { None, Few, Large };

/// Three isotropic 2-D clouds at the corners of a triangle. The spread sets
/// the overlap; the side length is fixed at 10.
inline LabeledDataset three_gaussians(Overlap overlap, std::uint64_t seed, int per_component = 500) {
  const double sd = overlap == Overlap::None ? 0.25 : overlap == Overlap::Few ? 1.6 : 3.0;
  const double side = 10.0;
  std::vector<Eigen::VectorXd> means{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(side, 0.0),
                                     Eigen::Vector2d(side / 2, side * std::sqrt(3.0) / 2)};
  std::vector<Eigen::MatrixXd> covs(3, Eigen::Matrix2d::Identity() * sd * sd);
  return gen_gaussian_mixture(means, covs, {per_component, per_component, per_component}, seed);
}

/// Erdos-Renyi blocks: edge probability p_in inside a block, p_out across.
inline LabeledGraph planted_partition(const std::vector<int>& block_sizes, double p_in, double p_out, std::uint64_t seed) {
  if (block_sizes.empty()) throw ValidationError("planted_partition: no blocks");
  if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1) throw ValidationError("planted_partition: probabilities out of range");
  std::vector<int> labels;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    if (block_sizes[b] < 1) throw ValidationError("planted_partition: empty block");
    labels.insert(labels.end(), static_cast<std::size_t>(block_sizes[b]), static_cast<int>(b));
  }
  const int n = static_cast<int>(labels.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? p_in : p_out))
        edges.push_back({i, j, 1.0});
  const int k = static_cast<int>(block_sizes.size());
  return {Graph(n, std::move(edges)), Partition(std::move(labels), k)};
}

inline LabeledGraph planted_partition(int n, int k, double p_in, double p_out, std::uint64_t seed) {
  if (k < 1 || n < k) throw ValidationError("planted_partition: need 1 <= k <= n");
  std::vector<int> sizes(static_cast<std::size_t>(k), n / k);
  for (int b = 0; b < n % k; ++b) ++sizes[static_cast<std::size_t>(b)];
  return planted_partition(sizes, p_in, p_out, seed);
}

/// Graph over a fixed labeling: p_in inside a community, p_out across.
inline Graph graph_from_labels(const std::vector<int>& labels, double p_in, double p_out, std::mt19937_64& rng) {
  const int n = static_cast<int>(labels.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? p_in : p_out))
        edges.push_back({i, j, 1.0});
  return Graph(n, std::move(edges));
}

enum class PlantedEventKind { Split, Merge };

struct PlantedEvent {
  int step = 1;        // 0-based snapshot at which the event is visible
  PlantedEventKind kind = PlantedEventKind::Split;
  int cluster = 0;     // split: cluster to halve; merge: first of the pair
  int other = 1;       // merge only
};

struct DriftOptions {
  int points_per_cluster = 100;  // point scenarios, per snapshot
  int nodes = 200;               // graph scenarios
  int communities = 2;
  double p_in = 0.3;
  double p_out = 0.02;
  double switch_fraction = 0.1;  // switching_labels: share of nodes moving per step
  double merge_speed = 2.0;      // multi_merge: clouds coincide at 1/merge_speed of the run
  int outliers = 0;              // multi_merge: size of a far-off burst in the middle snapshot
  std::vector<PlantedEvent> events{{1, PlantedEventKind::Split, 0, 1}};
};

namespace detail {

inline Snapshot point_snapshot(double t, DataMatrix x, std::vector<int> labels, int k) {
  Snapshot s;
  s.timestamp = t;
  s.ids.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) s.ids.push_back(std::to_string(i));
  s.points = std::move(x);
  s.truth = Partition(std::move(labels), k);
  return s;
}

inline void append_cloud(DataMatrix& x, std::vector<int>& labels, const Eigen::Vector2d& mean, double sd, int n,
                         int label, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index start = x.rows();
  x.conservativeResize(start + n, 2);
  for (int i = 0; i < n; ++i) {
    const double a = normal(rng);
    const double b = normal(rng);
    x(start + i, 0) = mean(0) + sd * a;
    x(start + i, 1) = mean(1) + sd * b;
    labels.push_back(label);
  }
}

inline Snapshot graph_snapshot(double t, Graph g, std::vector<int> labels) {
  Snapshot s;
  s.timestamp = t;
  s.ids = g.node_ids();
  s.graph = std::move(g);
  s.truth = Partition::from_labels(std::move(labels)).compacted();
  return s;
}

}  // namespace detail

/// Snapshot sequences for the evolving-data experiments.
///
/// two_drifting: two clouds whose means approach each other while their
/// spread grows. multi_merge: two clouds drift until they coincide (their
/// truth labels merge once they overlap), next to a static bimodal cluster.
/// switching_labels: planted two-community graphs where a share of nodes
/// changes community every step. planted_partition_evolve: planted graphs
/// following a script of splits and merges.
inline SnapshotSequence gen_drift_sequence(const std::string& scenario, int steps, std::uint64_t seed,
                                           const DriftOptions& opt = {}) {
  if (steps < 1) throw ValidationError("gen_drift_sequence: steps must be >= 1");
  std::mt19937_64 rng(seed);
  SnapshotSequence seq;
  const double denom = std::max(1, steps - 1);

  if (scenario == "two_drifting") {
    for (int t = 0; t < steps; ++t) {
      const double f = steps == 1 ? 0.0 : t / denom;
      const double gap = 10.0 - 6.0 * f;  // 10 -> 4
      const double sd = 0.5 + 0.5 * f;    // 0.5 -> 1.0
      DataMatrix x(0, 2);
      std::vector<int> labels;
      detail::append_cloud(x, labels, {-gap / 2, 0.0}, sd, opt.points_per_cluster, 0, rng);
      detail::append_cloud(x, labels, {gap / 2, 0.0}, sd, opt.points_per_cluster, 1, rng);
      seq.steps.push_back(detail::point_snapshot(t, std::move(x), std::move(labels), 2));
    }
  } else if (scenario == "multi_merge") {
    for (int t = 0; t < steps; ++t) {
      const double f = steps == 1 ? 0.0 : t / denom;
      const double gap = std::max(0.0, 12.0 * (1.0 - opt.merge_speed * f));
      const bool merged = gap < 1.0;
      DataMatrix x(0, 2);
      std::vector<int> labels;
      detail::append_cloud(x, labels, {-gap / 2, 0.0}, 0.8, opt.points_per_cluster, 0, rng);
      detail::append_cloud(x, labels, {gap / 2, 0.0}, 0.8, opt.points_per_cluster, merged ? 0 : 1, rng);
      const int bimodal = merged ? 1 : 2;
      detail::append_cloud(x, labels, {-1.0, 14.0}, 0.6, opt.points_per_cluster / 2, bimodal, rng);
      detail::append_cloud(x, labels, {1.0, 14.0}, 0.6, opt.points_per_cluster - opt.points_per_cluster / 2, bimodal, rng);
      int k = merged ? 2 : 3;
      if (opt.outliers > 0 && t == steps / 2) detail::append_cloud(x, labels, {16.0, -8.0}, 0.3, opt.outliers, k++, rng);
      seq.steps.push_back(detail::point_snapshot(t, std::move(x), std::move(labels), k));
    }
  } else if (scenario == "switching_labels") {
    const int n = opt.nodes;
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i * opt.communities / n;
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int t = 0; t < steps; ++t) {
      if (t > 0) {
        const int moves = static_cast<int>(std::lround(opt.switch_fraction * n));
        for (int m = 0; m < moves; ++m) {
          const int v = pick(rng);
          labels[static_cast<std::size_t>(v)] = (labels[static_cast<std::size_t>(v)] + 1) % opt.communities;
        }
      }
      seq.steps.push_back(detail::graph_snapshot(t, graph_from_labels(labels, opt.p_in, opt.p_out, rng), labels));
    }
  } else if (scenario == "planted_partition_evolve") {
    const int n = opt.nodes;
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i * opt.communities / n;
    for (int t = 0; t < steps; ++t) {
      for (const auto& ev : opt.events) {
        if (ev.step != t) continue;
        const int next = *std::max_element(labels.begin(), labels.end()) + 1;
        if (ev.kind == PlantedEventKind::Split) {
          int seen = 0;
          for (auto& l : labels)
            if (l == ev.cluster && (seen++ % 2) == 1) l = next;
        } else {
          for (auto& l : labels)
            if (l == ev.other) l = ev.cluster;
        }
      }
      seq.steps.push_back(detail::graph_snapshot(t, graph_from_labels(labels, opt.p_in, opt.p_out, rng), labels));
    }
  } else {
    throw ValidationError("gen_drift_sequence: unknown scenario '" + scenario + "'");
  }
  seq.validate();
  return seq;
}

/// Point stream built from a point sequence: snapshot order, and within each
/// snapshot a seeded shuffle so clusters interleave.
struct Stream {
  DataMatrix points;
  Partition truth;
  std::vector<int> step;  // snapshot index of each row
};

inline Stream flatten_sequence(const SnapshotSequence& seq, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Stream s{DataMatrix(0, 0), Partition(), {}};
  std::vector<int> labels;
  int k = 1;
  Eigen::Index row = 0;
  for (std::size_t t = 0; t < seq.steps.size(); ++t) {
    const auto& snap = seq.steps[t];
    if (!snap.points) throw ValidationError("flatten_sequence: snapshot without points");
    const DataMatrix& x = *snap.points;
    if (s.points.cols() == 0) s.points.resize(0, x.cols());
    std::vector<int> order(static_cast<std::size_t>(x.rows()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::shuffle(order.begin(), order.end(), rng);
    s.points.conservativeResize(row + x.rows(), x.cols());
    for (int i : order) {
      s.points.row(row++) = x.row(i);
      labels.push_back(snap.truth[static_cast<std::size_t>(i)]);
      s.step.push_back(static_cast<int>(t));
    }
    k = std::max(k, snap.truth.k());
  }
  s.truth = Partition(std::move(labels), k);
  return s;
}

struct FrequencySwitchOptions {
  int n_a = 7;              // series of the first type
  int n_b = 7;              // second type, never switching
  int n_c = 6;              // third type, matches the second outside [t1, t2)
  int period_a = 20;        // samples
  int period_b = 10;
  int period_c = 5;         // period of the third type inside [t1, t2)
  int hop = 20;             // samples between windows; a multiple of every period
  int window = 400;         // samples per window
  int t1 = 1500;            // sample index of the first switch
  int t2 = 3000;            // sample index of the switch back
  int length = 4500;        // samples per series
  double noise = 0.05;
};

/// Series in columns, samples in rows, plus the type of each column.
struct SeriesSet {
  DataMatrix series;
  std::vector<int> type;
};

inline SeriesSet frequency_switch_series(const FrequencySwitchOptions& o, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, o.noise);
  const int n = o.n_a + o.n_b + o.n_c;
  SeriesSet s{DataMatrix(o.length, n), {}};
  for (int c = 0; c < n; ++c) s.type.push_back(c < o.n_a ? 0 : c < o.n_a + o.n_b ? 1 : 2);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int t = 0; t < o.length; ++t)
    for (int c = 0; c < n; ++c) {
      int period = o.period_a;
      if (s.type[static_cast<std::size_t>(c)] == 1) period = o.period_b;
      if (s.type[static_cast<std::size_t>(c)] == 2) period = (t >= o.t1 && t < o.t2) ? o.period_c : o.period_b;
      s.series(t, c) = std::sin(two_pi * t / period) + normal(rng);
    }
  return s;
}

/// Windowed stream: for each window start (every `hop` samples) one point per
/// series, the window of that series. Truth tracks the regime of the window's
/// last sample: second and third type share a label outside [t1, t2).
inline Stream frequency_switch_stream(const FrequencySwitchOptions& o, std::uint64_t seed) {
  const SeriesSet s = frequency_switch_series(o, seed);
  const int n = static_cast<int>(s.type.size());
  Stream out{DataMatrix(0, o.window), Partition(), {}};
  std::vector<int> labels;
  Eigen::Index row = 0;
  int step = 0;
  for (int start = 0; start + o.window <= o.length; start += o.hop, ++step) {
    const int last = start + o.window - 1;
    out.points.conservativeResize(row + n, o.window);
    for (int c = 0; c < n; ++c) {
      out.points.row(row++) = s.series.block(start, c, o.window, 1).transpose();
      int label = s.type[static_cast<std::size_t>(c)] == 0 ? 0 : 1;
      if (s.type[static_cast<std::size_t>(c)] == 2 && last >= o.t1 && last < o.t2) label = 2;
      labels.push_back(label);
      out.step.push_back(step);
    }
  }
  out.truth = Partition(std::move(labels), 3);
  return out;
}

}  // namespace speclust
