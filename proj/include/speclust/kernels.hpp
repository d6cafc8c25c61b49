#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>
#include <vector>

#include "speclust/data.hpp"
#include "speclust/error.hpp"
#include "speclust/parallel.hpp"

namespace speclust {

enum class KernelKind { Rbf, Chi2, Cosine, Community, RbfCorrelation };

struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double sigma = 1.0;  // bandwidth; ignored by Cosine and Community

  static KernelSpec rbf(double sigma) { return checked({KernelKind::Rbf, sigma}); }
  static KernelSpec chi2(double sigma) { return checked({KernelKind::Chi2, sigma}); }
  static KernelSpec cosine() { return {KernelKind::Cosine, 1.0}; }
  static KernelSpec community() { return {KernelKind::Community, 1.0}; }
  static KernelSpec rbf_correlation(double sigma) { return checked({KernelKind::RbfCorrelation, sigma}); }

  bool has_bandwidth() const {
    return kind == KernelKind::Rbf || kind == KernelKind::Chi2 || kind == KernelKind::RbfCorrelation;
  }

  void validate() const {
    if (has_bandwidth() && !(sigma > 0.0 && std::isfinite(sigma)))
      throw ValidationError("KernelSpec: bandwidth must be positive");
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

private:
  static KernelSpec checked(KernelSpec s) {
    s.validate();
    return s;
  }
};

inline std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::Rbf: return "rbf";
    case KernelKind::Chi2: return "chi2";
    case KernelKind::Cosine: return "cosine";
    case KernelKind::Community: return "community";
    case KernelKind::RbfCorrelation: return "rbf_correlation";
  }
  return "?";
}

inline KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "rbf") return KernelKind::Rbf;
  if (s == "chi2") return KernelKind::Chi2;
  if (s == "cosine") return KernelKind::Cosine;
  if (s == "community") return KernelKind::Community;
  if (s == "rbf_correlation" || s == "rbf-correlation") return KernelKind::RbfCorrelation;
  throw ValidationError("unknown kernel '" + s + "'");
}

/// Evaluation points x training points. `symmetric` is set only when both
/// sides are the same point set.
struct KernelMatrix {
  Eigen::MatrixXd values;
  bool symmetric = false;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
};

constexpr double degree_floor = 1e-12;

struct DegreeVector {
  Eigen::VectorXd values;
  std::vector<int> below_floor;  // rows with d_i <= degree_floor

  bool ok() const { return below_floor.empty(); }
};

namespace detail {

inline double chi2_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                            const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double den = a(i) + b(i);
    if (den != 0.0) s += (a(i) - b(i)) * (a(i) - b(i)) / den;
  }
  return s;
}

/// Pearson correlation; a constant series correlates 0 with everything.
inline double pearson(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                      const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  const Eigen::RowVectorXd ca = a.array() - a.mean();
  const Eigen::RowVectorXd cb = b.array() - b.mean();
  const double den = ca.norm() * cb.norm();
  if (den == 0.0) return 0.0;
  return std::clamp(ca.dot(cb) / den, -1.0, 1.0);
}

}  // namespace detail

inline double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                          const Eigen::Ref<const Eigen::RowVectorXd>& y) {
  if (x.size() != y.size()) throw ValidationError("kernel_eval: dimension mismatch");
  switch (spec.kind) {
    case KernelKind::Rbf:
      return std::exp(-(x - y).squaredNorm() / (spec.sigma * spec.sigma));
    case KernelKind::Chi2:
      return std::exp(-detail::chi2_distance(x, y) / (spec.sigma * spec.sigma));
    case KernelKind::Cosine: {
      const double den = x.norm() * y.norm();
      return den == 0.0 ? 0.0 : x.dot(y) / den;
    }
    case KernelKind::RbfCorrelation: {
      const double cd2 = 0.5 * (1.0 - detail::pearson(x, y));
      return std::exp(-cd2 / (spec.sigma * spec.sigma));
    }
    case KernelKind::Community:
      throw ValidationError("kernel_eval: community kernel needs a graph");
  }
  return 0.0;
}

/// Dense kernel between the rows of X and the rows of Y. Pass the same object
/// twice to get a symmetric matrix.
inline KernelMatrix kernel_matrix(const KernelSpec& spec, const DataMatrix& X, const DataMatrix& Y) {
  spec.validate();
  if (X.cols() != Y.cols()) throw ValidationError("kernel_matrix: dimension mismatch");
  const bool same = &X == &Y;
  KernelMatrix K{Eigen::MatrixXd(X.rows(), Y.rows()), same};

  switch (spec.kind) {
    case KernelKind::Rbf: {
      const double s2 = spec.sigma * spec.sigma;
      parallel_for(X.rows(), [&](long i) {
        for (Eigen::Index j = 0; j < Y.rows(); ++j) {
          const double d2 = (X.row(i) - Y.row(j)).squaredNorm();
          K.values(i, j) = std::exp(-d2 / s2);
        }
      });
      break;
    }
    case KernelKind::Cosine: {
      const Eigen::VectorXd xn = X.rowwise().norm();
      const Eigen::VectorXd yn = Y.rowwise().norm();
      K.values.noalias() = X * Y.transpose();
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < Y.rows(); ++j) {
          const double den = xn(i) * yn(j);
          K.values(i, j) = den == 0.0 ? 0.0 : K.values(i, j) / den;
        }
      break;
    }
    case KernelKind::Community:
      throw ValidationError("kernel_matrix: community kernel needs a graph");
    default:
      parallel_for(X.rows(), [&](long i) {
        for (Eigen::Index j = 0; j < Y.rows(); ++j) K.values(i, j) = kernel_eval(spec, X.row(i), Y.row(j));
      });
  }
  if (same) {
    // enforce exact symmetry against rounding in the product forms
    for (Eigen::Index i = 0; i < K.values.rows(); ++i)
      for (Eigen::Index j = i + 1; j < K.values.cols(); ++j) K.values(j, i) = K.values(i, j);
  }
  return K;
}

inline KernelMatrix kernel_matrix(const KernelSpec& spec, const DataMatrix& X) {
  return kernel_matrix(spec, X, X);
}

namespace detail {

inline std::vector<int> common_neighbors(const Graph& g, int i, int j) {
  auto [ib, ie] = g.neighbors(i);
  std::vector<int> out;
  if (i == j) return std::vector<int>(ib, ie);
  auto [jb, je] = g.neighbors(j);
  std::set_intersection(ib, ie, jb, je, std::back_inserter(out));
  return out;
}

inline double edges_within(const Graph& g, const std::vector<int>& nodes) {
  double s = 0.0;
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = a + 1; b < nodes.size(); ++b) s += g.weight(nodes[a], nodes[b]);
  return s;
}

}  // namespace detail

/// Community kernel block: entry (a, b) is the total weight of edges whose
/// endpoints are both common neighbors of rows[a] and cols[b]. Each unordered
/// pair counts once; the diagonal uses the node's own neighborhood.
inline KernelMatrix community_kernel(const Graph& g, const std::vector<int>& rows, const std::vector<int>& cols) {
  for (int v : rows)
    if (v < 0 || v >= g.n_nodes()) throw ValidationError("community_kernel: node out of range");
  for (int v : cols)
    if (v < 0 || v >= g.n_nodes()) throw ValidationError("community_kernel: node out of range");
  KernelMatrix K{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                       static_cast<Eigen::Index>(cols.size())),
                 rows == cols};
  parallel_for(static_cast<long>(rows.size()), [&](long a) {
    for (std::size_t b = 0; b < cols.size(); ++b)
      K.values(a, static_cast<Eigen::Index>(b)) =
          detail::edges_within(g, detail::common_neighbors(g, rows[static_cast<std::size_t>(a)], cols[b]));
  });
  return K;
}

/// Full n x n community kernel. Every edge (k, l) adds its weight to all
/// pairs of nodes adjacent to both endpoints.
inline KernelMatrix community_kernel(const Graph& g) {
  const int n = g.n_nodes();
  KernelMatrix K{Eigen::MatrixXd::Zero(n, n), true};
  std::vector<int> common;
  for (const auto& e : g.edges()) {
    common.clear();
    auto [ub, ue] = g.neighbors(e.u);
    auto [vb, ve] = g.neighbors(e.v);
    std::set_intersection(ub, ue, vb, ve, std::back_inserter(common));
    for (int i : common)
      for (int j : common) K.values(i, j) += e.weight;
  }
  return K;
}

inline DegreeVector degree_vector(const KernelMatrix& K) {
  DegreeVector d{K.values.rowwise().sum(), {}};
  for (Eigen::Index i = 0; i < d.values.size(); ++i)
    if (!(d.values(i) > degree_floor)) d.below_floor.push_back(static_cast<int>(i));
  return d;
}

}  // namespace speclust
