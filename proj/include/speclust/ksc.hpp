#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "speclust/data.hpp"
#include "speclust/error.hpp"
#include "speclust/kernels.hpp"

namespace speclust {

/// N x (k-1) latent variables, one row per evaluated point.
using ScoreMatrix = Eigen::MatrixXd;

/// k codewords in {-1, +1}^(k-1), one per row.
using Codebook = Eigen::MatrixXi;

/// Where the training points of a model came from. `kind` is "rows" for data
/// matrices or "nodes" for graph nodes; `ids` are row indices or node ids.
struct TrainSource {
  std::string kind = "rows";
  std::string path;
  std::vector<std::string> ids;

  friend bool operator==(const TrainSource&, const TrainSource&) = default;
};

struct KscModel {
  int k = 2;
  KernelSpec kernel;
  Eigen::MatrixXd alphas;        // N_Tr x (k-1), unit-norm columns
  Eigen::VectorXd biases;        // k-1
  Eigen::VectorXd eigenvalues;   // k-1, descending
  Codebook codebook;             // k x (k-1)
  TrainSource source;
  DataMatrix train_points;       // empty for graph models

  int n_train() const { return static_cast<int>(alphas.rows()); }
};

/// A trained model together with its training scores and labels.
struct KscFit {
  KscModel model;
  ScoreMatrix train_scores;
  Partition train_labels;
};

namespace detail {

/// Flips v so that its largest-magnitude entry is positive. Entries within a
/// relative 1e-9 of the maximum count as tied and the lowest index wins.
inline void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  const double m = v.cwiseAbs().maxCoeff();
  if (m == 0.0) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= m * (1.0 - 1e-9)) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

inline int sign_bit(double x) { return x >= 0.0 ? 1 : -1; }

inline bool is_symmetric(const Eigen::MatrixXd& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// The k most frequent rows of sign(m). Count ties go to the pattern seen first.
inline Codebook frequent_sign_patterns(const Eigen::MatrixXd& m, int k) {
  std::map<std::vector<int>, std::pair<int, int>> seen;  // pattern -> (count, first row)
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<int> p(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) p[static_cast<std::size_t>(j)] = sign_bit(m(i, j));
    auto [it, fresh] = seen.emplace(std::move(p), std::make_pair(0, static_cast<int>(i)));
    ++it->second.first;
  }
  if (static_cast<int>(seen.size()) < k) throw DegenerateCodebook(k, static_cast<int>(seen.size()));
  std::vector<std::pair<const std::vector<int>*, std::pair<int, int>>> order;
  for (const auto& [p, cf] : seen) order.push_back({&p, cf});
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  Codebook cb(k, m.cols());
  for (int p = 0; p < k; ++p)
    for (Eigen::Index j = 0; j < m.cols(); ++j) cb(p, j) = (*order[static_cast<std::size_t>(p)].first)[static_cast<std::size_t>(j)];
  return cb;
}

inline void require_degrees(const DegreeVector& d) {
  if (!d.ok()) throw ZeroDegreeRow(d.below_floor);
}

}  // namespace detail

/// Explicit D^-1 M_D Omega, the matrix whose leading eigenvectors KSC keeps.
inline Eigen::MatrixXd ksc_operator(const KernelMatrix& K) {
  const DegreeVector d = degree_vector(K);
  detail::require_degrees(d);
  const Eigen::VectorXd dinv = d.values.cwiseInverse();
  const double c = dinv.sum();
  const Eigen::Index n = K.rows();
  Eigen::MatrixXd md = Eigen::MatrixXd::Identity(n, n) - Eigen::VectorXd::Ones(n) * dinv.transpose() / c;
  return dinv.asDiagonal() * (md * K.values);
}

/// b_l = -(1' D^-1 Omega alpha_l) / (1' D^-1 1).
inline Eigen::VectorXd ksc_biases(const KernelMatrix& K, const Eigen::MatrixXd& alphas) {
  const Eigen::VectorXd dinv = degree_vector(K).values.cwiseInverse();
  const Eigen::RowVectorXd w = dinv.transpose() * K.values;
  return -(w * alphas).transpose() / dinv.sum();
}

/// e = Omega_test alpha + 1 b'.
inline ScoreMatrix project(const KscModel& m, const KernelMatrix& K_test) {
  if (K_test.cols() != m.alphas.rows())
    throw ValidationError("project: kernel has " + std::to_string(K_test.cols()) + " columns, model has " +
                          std::to_string(m.alphas.rows()) + " training points");
  ScoreMatrix e = K_test.values * m.alphas;
  e.rowwise() += m.biases.transpose();
  return e;
}

/// Minimum Hamming distance decoding with sign(0) = +1 and lowest-index ties.
inline Partition assign_hamming(const ScoreMatrix& scores, const Codebook& codebook) {
  if (scores.cols() != codebook.cols()) throw ValidationError("assign_hamming: codeword length mismatch");
  std::vector<int> labels(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    int best_d = std::numeric_limits<int>::max();
    for (Eigen::Index p = 0; p < codebook.rows(); ++p) {
      int d = 0;
      for (Eigen::Index j = 0; j < scores.cols(); ++j) d += detail::sign_bit(scores(i, j)) != codebook(p, j);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(p);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
  return Partition(std::move(labels), static_cast<int>(codebook.rows()));
}

namespace detail {

/// Leading k-1 eigenpairs of D^-1 M_D Omega for a symmetric kernel. The
/// operator is similar to the symmetric P S P with S = D^-1/2 Omega D^-1/2 and
/// P the projector orthogonal to D^-1/2 1, so the spectrum is real.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> ksc_eigen_symmetric(const KernelMatrix& K, int nev) {
  const Eigen::VectorXd d = K.values.rowwise().sum();
  const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
  const Eigen::Index n = K.rows();
  Eigen::VectorXd u = s / s.norm();
  Eigen::MatrixXd S = s.asDiagonal() * K.values * s.asDiagonal();
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) - u * u.transpose();
  Eigen::MatrixXd A = P * S * P;
  A = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw NumericalError("train_ksc: eigensolver failed");
  Eigen::VectorXd lambda(nev);
  Eigen::MatrixXd alpha(n, nev);
  for (int l = 0; l < nev; ++l) {
    const Eigen::Index c = n - 1 - l;  // ascending order from the solver
    lambda(l) = es.eigenvalues()(c);
    alpha.col(l) = s.cwiseProduct(es.eigenvectors().col(c));
  }
  return {lambda, alpha};
}

inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> ksc_eigen_general(const KernelMatrix& K, int nev) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(ksc_operator(K));
  if (es.info() != Eigen::Success) throw NumericalError("train_ksc: eigensolver failed");
  const Eigen::Index n = K.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return ev(a).real() > ev(b).real(); });
  Eigen::VectorXd lambda(nev);
  Eigen::MatrixXd alpha(n, nev);
  for (int l = 0; l < nev; ++l) {
    const Eigen::Index c = order[static_cast<std::size_t>(l)];
    const Eigen::VectorXcd v = es.eigenvectors().col(c);
    // rotate the complex vector so its largest entry is real before measuring
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    const Eigen::VectorXcd w = v * std::polar(1.0, -std::arg(v(imax)));
    if (std::abs(ev(c).imag()) > 1e-8 || w.imag().norm() > 1e-8 * w.norm()) throw NonRealSpectrum("train_ksc: retained eigenpair is not real");
    lambda(l) = ev(c).real();
    alpha.col(l) = w.real();
  }
  return {lambda, alpha};
}

}  // namespace detail

/// Trains KSC on a square kernel. Symmetric kernels take the similarity
/// transform route; others go through the general eigensolver.
inline KscFit train_ksc(const KernelMatrix& K, int k) {
  if (K.rows() != K.cols()) throw ValidationError("train_ksc: kernel must be square");
  if (k < 2 || k > K.rows()) throw ValidationError("train_ksc: need 2 <= k <= N_Tr");
  if (!K.values.allFinite()) throw ValidationError("train_ksc: non-finite kernel");
  detail::require_degrees(degree_vector(K));

  const int nev = k - 1;
  auto [lambda, alpha] = detail::is_symmetric(K.values) ? detail::ksc_eigen_symmetric(K, nev)
                                                        : detail::ksc_eigen_general(K, nev);
  for (int l = 0; l < nev; ++l) {
    alpha.col(l).normalize();
    detail::normalize_sign(alpha.col(l));
  }

  KscFit fit;
  KscModel& m = fit.model;
  m.k = k;
  m.alphas = std::move(alpha);
  m.eigenvalues = std::move(lambda);
  m.biases = ksc_biases(K, m.alphas);
  m.codebook = detail::frequent_sign_patterns(m.alphas, k);
  fit.train_scores = project(m, K);
  fit.train_labels = assign_hamming(fit.train_scores, m.codebook);
  return fit;
}

/// Convenience wrapper for point data; the model keeps the training points.
inline KscFit train_ksc(const KernelSpec& spec, const DataMatrix& X, int k) {
  KscFit fit = train_ksc(kernel_matrix(spec, X), k);
  fit.model.kernel = spec;
  fit.model.train_points = X;
  fit.model.source.kind = "rows";
  for (Eigen::Index i = 0; i < X.rows(); ++i) fit.model.source.ids.push_back(std::to_string(i));
  return fit;
}

/// Scores of new points against a point-data model.
inline ScoreMatrix project_points(const KscModel& m, const DataMatrix& X_test) {
  if (m.train_points.size() == 0) throw ValidationError("project_points: model has no training points");
  return project(m, kernel_matrix(m.kernel, X_test, m.train_points));
}

struct KmeansResult {
  Partition labels;
  Eigen::MatrixXd centroids;  // k x d
  double inertia = 0.0;
};

namespace detail {

inline KmeansResult lloyd(const Eigen::MatrixXd& X, Eigen::MatrixXd C, int max_iter) {
  const Eigen::Index n = X.rows();
  const int k = static_cast<int>(C.rows());
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  double inertia = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int p = 0; p < k; ++p) {
        const double d = (X.row(i) - C.row(p)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = p;
        }
      }
      inertia += bd;
      changed = changed || labels[static_cast<std::size_t>(i)] != best;
      labels[static_cast<std::size_t>(i)] = best;
    }
    if (!changed && it > 0) break;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, X.cols());
    std::vector<int> cnt(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sum.row(labels[static_cast<std::size_t>(i)]) += X.row(i);
      ++cnt[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int p = 0; p < k; ++p)
      if (cnt[static_cast<std::size_t>(p)] > 0) C.row(p) = sum.row(p) / cnt[static_cast<std::size_t>(p)];
  }
  return {Partition(std::move(labels), k), std::move(C), inertia};
}

inline Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& X, int k, std::mt19937_64& rng) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd C(k, X.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  C.row(0) = X.row(pick(rng));
  Eigen::VectorXd d2 = (X.rowwise() - C.row(0)).rowwise().squaredNorm();
  for (int p = 1; p < k; ++p) {
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (total <= 0.0) {
      chosen = pick(rng);
    } else {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (chosen = 0; chosen < n - 1; ++chosen) {
        r -= d2(chosen);
        if (r < 0.0) break;
      }
    }
    C.row(p) = X.row(chosen);
    d2 = d2.cwiseMin((X.rowwise() - C.row(p)).rowwise().squaredNorm());
  }
  return C;
}

}  // namespace detail

/// Lloyd's k-means with k-means++ seeding; the lowest-inertia restart wins.
inline KmeansResult kmeans(const Eigen::MatrixXd& X, int k, std::uint64_t seed, int restarts = 10, int max_iter = 300) {
  if (k < 1 || k > X.rows()) throw ValidationError("kmeans: need 1 <= k <= n");
  std::mt19937_64 rng(seed);
  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    KmeansResult res = detail::lloyd(X, detail::kmeanspp_init(X, k, rng), max_iter);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

/// Warm-started Lloyd iterations from given centroids.
inline KmeansResult kmeans_from(const Eigen::MatrixXd& X, const Eigen::MatrixXd& centroids, int max_iter = 300) {
  return detail::lloyd(X, centroids, max_iter);
}

enum class Laplacian { Unnormalized, Symmetric, RandomWalk };

/// Baseline spectral clustering on a similarity matrix.
inline Partition classical_sc(const KernelMatrix& S, int k, Laplacian lap, std::uint64_t seed = 0) {
  if (S.rows() != S.cols()) throw ValidationError("classical_sc: similarity must be square");
  if (k < 1 || k > S.rows()) throw ValidationError("classical_sc: need 1 <= k <= n");
  if ((S.values.array() < 0.0).any()) throw ValidationError("classical_sc: negative similarity");
  const Eigen::Index n = S.rows();
  if (k == 1) return Partition(std::vector<int>(static_cast<std::size_t>(n), 0), 1);

  const Eigen::VectorXd d = S.values.rowwise().sum();
  Eigen::MatrixXd L;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (d(i) > 0.0) s(i) = 1.0 / std::sqrt(d(i));
  if (lap == Laplacian::Unnormalized) {
    L = Eigen::MatrixXd(d.asDiagonal()) - S.values;
  } else {
    // random-walk eigenvectors are D^-1/2 times the symmetric ones
    L = Eigen::MatrixXd::Identity(n, n) - s.asDiagonal() * S.values * s.asDiagonal();
  }
  L = 0.5 * (L + L.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  if (es.info() != Eigen::Success) throw NumericalError("classical_sc: eigensolver failed");
  Eigen::MatrixXd U = es.eigenvectors().leftCols(k);
  if (lap == Laplacian::RandomWalk) U = s.asDiagonal() * U;
  if (lap == Laplacian::Symmetric)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double nr = U.row(i).norm();
      if (nr > 0.0) U.row(i) /= nr;
    }
  return kmeans(U, k, seed).labels;
}

}  // namespace speclust
