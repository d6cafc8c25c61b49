#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "speclust/data.hpp"
#include "speclust/error.hpp"
#include "speclust/ksc.hpp"

namespace speclust {

struct PrototypeSet {
  Eigen::MatrixXd prototypes;  // k x (k-1), one prototype per row
  std::vector<int> counts;

  int k() const { return static_cast<int>(prototypes.rows()); }
};

struct SoftPartition {
  Eigen::MatrixXd memberships;  // N x k

  int k() const { return static_cast<int>(memberships.cols()); }

  /// Argmax per row, lowest index on ties.
  Partition hard() const {
    std::vector<int> labels(static_cast<std::size_t>(memberships.rows()));
    for (Eigen::Index i = 0; i < memberships.rows(); ++i) {
      Eigen::Index best = 0;
      memberships.row(i).maxCoeff(&best);
      labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return Partition(std::move(labels), std::max(1, k()));
  }
};

/// Per-cluster mean of the score rows.
inline PrototypeSet compute_prototypes(const ScoreMatrix& scores, const Partition& part) {
  if (static_cast<Eigen::Index>(part.size()) != scores.rows())
    throw ValidationError("compute_prototypes: partition and scores differ in length");
  PrototypeSet ps{Eigen::MatrixXd::Zero(part.k(), scores.cols()), part.counts()};
  for (int p = 0; p < part.k(); ++p)
    if (ps.counts[static_cast<std::size_t>(p)] == 0) throw EmptyCluster(p);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) ps.prototypes.row(part[static_cast<std::size_t>(i)]) += scores.row(i);
  for (int p = 0; p < part.k(); ++p) ps.prototypes.row(p) /= ps.counts[static_cast<std::size_t>(p)];
  return ps;
}

/// Distances used by the soft assignment: cosine for k >= 3, Euclidean for
/// k = 2. Returns an empty row when the cosine distance is undefined because
/// the score vector is zero.
inline Eigen::RowVectorXd prototype_distances(const Eigen::Ref<const Eigen::RowVectorXd>& e, const PrototypeSet& ps) {
  const int k = ps.k();
  Eigen::RowVectorXd d(k);
  if (k == 2) {
    for (int p = 0; p < k; ++p) d(p) = (e - ps.prototypes.row(p)).norm();
    return d;
  }
  const double en = e.norm();
  if (en == 0.0) return {};
  for (int p = 0; p < k; ++p) {
    const double sn = ps.prototypes.row(p).norm();
    d(p) = sn == 0.0 ? 1.0 : std::max(0.0, 1.0 - e.dot(ps.prototypes.row(p)) / (en * sn));
  }
  return d;
}

/// Product-form memberships. Zero distances make the row uniform over the
/// zero-distance clusters.
inline SoftPartition soft_assign(const ScoreMatrix& scores, const PrototypeSet& ps) {
  const int k = ps.k();
  if (k < 2) throw ValidationError("soft_assign: need k >= 2");
  if (scores.cols() != ps.prototypes.cols()) throw ValidationError("soft_assign: score dimension mismatch");
  constexpr double zero_tol = 1e-14;
  SoftPartition sp{Eigen::MatrixXd::Zero(scores.rows(), k)};
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const Eigen::RowVectorXd d = prototype_distances(scores.row(i), ps);
    if (d.size() == 0) {
      sp.memberships.row(i).setConstant(1.0 / k);
      continue;
    }
    const auto zeros = (d.array() <= zero_tol).count();
    if (zeros > 0) {
      for (int p = 0; p < k; ++p)
        if (d(p) <= zero_tol) sp.memberships(i, p) = 1.0 / static_cast<double>(zeros);
      continue;
    }
    Eigen::RowVectorXd prod(k);
    for (int q = 0; q < k; ++q) {
      double v = 1.0;
      for (int j = 0; j < k; ++j)
        if (j != q) v *= d(j);
      prod(q) = v;
    }
    sp.memberships.row(i) = prod / prod.sum();
  }
  return sp;
}

/// Mean over clusters of the mean winning membership; -inf if some cluster
/// claims no point.
inline double ams(const SoftPartition& soft) {
  const Partition hard = soft.hard();
  const int k = soft.k();
  std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
  const auto counts = hard.counts();
  for (std::size_t i = 0; i < hard.size(); ++i)
    sum[static_cast<std::size_t>(hard[i])] += soft.memberships(static_cast<Eigen::Index>(i), hard[i]);
  double total = 0.0;
  for (int p = 0; p < k; ++p) {
    if (counts[static_cast<std::size_t>(p)] == 0) return -std::numeric_limits<double>::infinity();
    total += sum[static_cast<std::size_t>(p)] / counts[static_cast<std::size_t>(p)];
  }
  return total / k;
}

/// Prototypes from the KSC training partition, ready for soft assignment.
inline PrototypeSet sksc_prototypes(const KscModel& model, const KernelMatrix& K_train) {
  const ScoreMatrix train = project(model, K_train);
  return compute_prototypes(train, assign_hamming(train, model.codebook));
}

/// KSC initialization, prototype refresh and soft out-of-sample assignment.
inline SoftPartition sksc_full(const KscModel& model, const KernelMatrix& K_train, const KernelMatrix& K_test) {
  return soft_assign(project(model, K_test), sksc_prototypes(model, K_train));
}

}  // namespace speclust
