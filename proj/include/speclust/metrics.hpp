#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "speclust/data.hpp"
#include "speclust/error.hpp"

namespace speclust {

struct ContingencyTable {
  Eigen::MatrixXd counts;  // r x c
  Eigen::VectorXd a;       // row marginals
  Eigen::VectorXd b;       // column marginals
  double n = 0.0;

  ContingencyTable(const Partition& u, const Partition& v) {
    if (u.size() != v.size()) throw ValidationError("contingency: partitions differ in length");
    counts = Eigen::MatrixXd::Zero(u.k(), v.k());
    for (std::size_t i = 0; i < u.size(); ++i) counts(u[i], v[i]) += 1.0;
    a = counts.rowwise().sum();
    b = counts.colwise().sum().transpose();
    n = static_cast<double>(u.size());
  }

  /// True when the table is a relabeling: every nonempty row and column holds
  /// exactly one nonzero cell.
  bool is_bijection() const {
    for (Eigen::Index i = 0; i < counts.rows(); ++i)
      if (a(i) > 0 && (counts.row(i).array() > 0).count() != 1) return false;
    for (Eigen::Index j = 0; j < counts.cols(); ++j)
      if (b(j) > 0 && (counts.col(j).array() > 0).count() != 1) return false;
    return true;
  }
};

namespace detail {
inline double choose2(double x) { return x * (x - 1.0) / 2.0; }
}  // namespace detail

/// Hubert-Arabie adjusted Rand index. When the expected and maximum indices
/// coincide the result is 1 for identical partitions and 0 otherwise.
inline double ari(const Partition& u, const Partition& v) {
  const ContingencyTable t(u, v);
  double sum_ij = 0.0;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) sum_ij += detail::choose2(t.counts(i, j));
  double sum_a = 0.0, sum_b = 0.0;
  for (Eigen::Index i = 0; i < t.a.size(); ++i) sum_a += detail::choose2(t.a(i));
  for (Eigen::Index j = 0; j < t.b.size(); ++j) sum_b += detail::choose2(t.b(j));
  const double total = detail::choose2(t.n);
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double den = max_index - expected;
  if (std::abs(den) < 1e-12) return t.is_bijection() ? 1.0 : 0.0;
  return (sum_ij - expected) / den;
}

/// Mutual information over sqrt(H(U) H(V)); 0 when either entropy is 0.
inline double nmi(const Partition& u, const Partition& v) {
  const ContingencyTable t(u, v);
  if (t.n == 0.0) return 0.0;
  auto entropy = [&](const Eigen::VectorXd& m) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i)
      if (m(i) > 0) h -= m(i) / t.n * std::log(m(i) / t.n);
    return h;
  };
  const double hu = entropy(t.a);
  const double hv = entropy(t.b);
  if (hu <= 0.0 || hv <= 0.0) return 0.0;
  double mi = 0.0;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
      const double nij = t.counts(i, j);
      if (nij > 0) mi += nij / t.n * std::log(t.n * nij / (t.a(i) * t.b(j)));
    }
  return std::clamp(mi / std::sqrt(hu * hv), 0.0, 1.0);
}

/// Weighted modularity, evaluated through per-cluster aggregates of the
/// trace form: sum_p (2 w_in(p) - vol(p)^2 / 2m) / 2m.
inline double modularity(const Graph& g, const Partition& p) {
  if (static_cast<int>(p.size()) != g.n_nodes()) throw ValidationError("modularity: labels do not cover nodes");
  double two_m = 0.0;
  for (const auto& e : g.edges()) two_m += 2.0 * e.weight;
  if (two_m <= 0.0) throw ValidationError("modularity: graph has no edges");
  std::vector<double> inside(static_cast<std::size_t>(p.k()), 0.0), vol(static_cast<std::size_t>(p.k()), 0.0);
  for (const auto& e : g.edges()) {
    vol[static_cast<std::size_t>(p[static_cast<std::size_t>(e.u)])] += e.weight;
    vol[static_cast<std::size_t>(p[static_cast<std::size_t>(e.v)])] += e.weight;
    if (p[static_cast<std::size_t>(e.u)] == p[static_cast<std::size_t>(e.v)])
      inside[static_cast<std::size_t>(p[static_cast<std::size_t>(e.u)])] += 2.0 * e.weight;
  }
  double q = 0.0;
  for (int c = 0; c < p.k(); ++c)
    q += inside[static_cast<std::size_t>(c)] - vol[static_cast<std::size_t>(c)] * vol[static_cast<std::size_t>(c)] / two_m;
  return q / two_m;
}

struct ConductanceResult {
  std::vector<double> per_cluster;  // one entry per label 0..k-1
  double mean = 0.0;                // over nonempty clusters
  std::vector<std::string> warnings;
};

/// Cut weight over min(vol(S), vol(V \ S)) per cluster.
inline ConductanceResult conductance(const Graph& g, const Partition& p) {
  if (static_cast<int>(p.size()) != g.n_nodes()) throw ValidationError("conductance: labels do not cover nodes");
  const auto k = static_cast<std::size_t>(p.k());
  std::vector<double> cut(k, 0.0), vol(k, 0.0);
  double total = 0.0;
  for (const auto& e : g.edges()) {
    const auto a = static_cast<std::size_t>(p[static_cast<std::size_t>(e.u)]);
    const auto b = static_cast<std::size_t>(p[static_cast<std::size_t>(e.v)]);
    vol[a] += e.weight;
    vol[b] += e.weight;
    total += 2.0 * e.weight;
    if (a != b) {
      cut[a] += e.weight;
      cut[b] += e.weight;
    }
  }
  ConductanceResult r;
  r.per_cluster.assign(k, 0.0);
  const auto counts = p.counts();
  int nonempty = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    ++nonempty;
    const double den = std::min(vol[c], total - vol[c]);
    if (den <= 0.0) {
      r.warnings.push_back("cluster " + std::to_string(c) + ": zero volume, conductance set to 0");
      continue;
    }
    r.per_cluster[c] = cut[c] / den;
    r.mean += r.per_cluster[c];
  }
  if (nonempty > 0) r.mean /= nonempty;
  return r;
}

struct SilhouetteResult {
  Eigen::VectorXd values;
  double msv = 0.0;
};

/// Euclidean silhouette. Singletons and points with a = b = 0 score 0.
inline SilhouetteResult silhouette(const DataMatrix& X, const Partition& p) {
  if (static_cast<Eigen::Index>(p.size()) != X.rows()) throw ValidationError("silhouette: size mismatch");
  if (p.nonempty_clusters() < 2) throw ValidationError("silhouette: need at least 2 clusters");
  const Eigen::Index n = X.rows();
  const int k = p.k();
  const auto counts = p.counts();
  SilhouetteResult r{Eigen::VectorXd::Zero(n), 0.0};
  Eigen::VectorXd sums(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    sums.setZero();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sums(p[static_cast<std::size_t>(j)]) += (X.row(i) - X.row(j)).norm();
    const int own = p[static_cast<std::size_t>(i)];
    if (counts[static_cast<std::size_t>(own)] <= 1) continue;
    const double a = sums(own) / (counts[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
      if (c != own && counts[static_cast<std::size_t>(c)] > 0) b = std::min(b, sums(c) / counts[static_cast<std::size_t>(c)]);
    const double den = std::max(a, b);
    r.values(i) = den > 0.0 ? (b - a) / den : 0.0;
  }
  r.msv = r.values.mean();
  return r;
}

/// Davies-Bouldin index with dispersion = mean distance to the centroid.
inline double dbi(const DataMatrix& X, const Partition& p) {
  if (static_cast<Eigen::Index>(p.size()) != X.rows()) throw ValidationError("dbi: size mismatch");
  if (p.nonempty_clusters() < 2) throw ValidationError("dbi: need at least 2 clusters");
  const int k = p.k();
  const auto counts = p.counts();
  Eigen::MatrixXd cent = Eigen::MatrixXd::Zero(k, X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) cent.row(p[static_cast<std::size_t>(i)]) += X.row(i);
  for (int c = 0; c < k; ++c)
    if (counts[static_cast<std::size_t>(c)] > 0) cent.row(c) /= counts[static_cast<std::size_t>(c)];
  Eigen::VectorXd s = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const int c = p[static_cast<std::size_t>(i)];
    s(c) += (X.row(i) - cent.row(c)).norm() / counts[static_cast<std::size_t>(c)];
  }
  double total = 0.0;
  int live = 0;
  for (int i = 0; i < k; ++i) {
    if (counts[static_cast<std::size_t>(i)] == 0) continue;
    ++live;
    double worst = 0.0;
    for (int j = 0; j < k; ++j) {
      if (j == i || counts[static_cast<std::size_t>(j)] == 0) continue;
      const double d = (cent.row(i) - cent.row(j)).norm();
      const double num = s(i) + s(j);
      const double r = d > 0.0 ? num / d : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      worst = std::max(worst, r);
    }
    total += worst;
  }
  return total / live;
}

}  // namespace speclust
