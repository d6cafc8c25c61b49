#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "speclust/data.hpp"
#include "speclust/error.hpp"
#include "speclust/kernels.hpp"
#include "speclust/ksc.hpp"
#include "speclust/metrics.hpp"

namespace speclust {

struct IkscOptions {
  double tau_merge = 0.5;
  int death_horizon = 500;
  int min_size = 5;
  int calibration = 100;      // stream prefix used to set eps_deg
  double eps_quantile = 0.05;
  double eps_scale = 0.01;    // eps_deg = eps_scale * quantile of calibration degrees
  std::optional<double> eps_deg;  // explicit threshold, skips calibration
  double count_cap = 25.0;    // caps n_old in the eigenspace centroid step; 0 keeps the running mean
  double input_count_cap = 0.0;  // same for the input-space centroid step
  bool model_scaling = false;  // apply the stored biases and 1/lambda in the eigenspace projection
};

struct IkscModel {
  KernelSpec kernel;
  Eigen::MatrixXd centroids;        // k x d, input space
  Eigen::MatrixXd alpha_centroids;  // k x dim, eigenspace
  std::vector<double> counts;
  std::vector<int> ids;             // stable cluster ids
  std::vector<long> last_update;    // arrival index of the latest assignment
  Eigen::VectorXd eigenvalues;      // dim
  Eigen::VectorXd biases;           // dim
  double eps_deg = 0.0;
  bool calibrated = false;
  IkscOptions options;
  int next_id = 0;
  long seen = 0;                    // arrival index of the next point

  int k() const { return static_cast<int>(centroids.rows()); }
  int dim() const { return static_cast<int>(alpha_centroids.cols()); }
};

enum class IkscEventKind { Birth, Merge, Death, Outlier };

inline std::string to_string(IkscEventKind k) {
  switch (k) {
    case IkscEventKind::Birth: return "birth";
    case IkscEventKind::Merge: return "merge";
    case IkscEventKind::Death: return "death";
    case IkscEventKind::Outlier: return "outlier";
  }
  return "?";
}

struct IkscEvent {
  long index = 0;
  IkscEventKind kind = IkscEventKind::Birth;
  int cluster = 0;   // merge: surviving cluster
  int other = -1;    // merge: absorbed cluster
  double size = 0.0;
};

/// Centroids from a trained model and its training partition.
inline IkscModel init_iksc(const KscFit& fit, const DataMatrix& train_points, const Partition& part,
                           const IkscOptions& opt = {}) {
  const KscModel& m = fit.model;
  if (train_points.rows() != m.alphas.rows() || static_cast<Eigen::Index>(part.size()) != train_points.rows())
    throw ValidationError("init_iksc: training points, alphas and partition disagree");
  const auto counts = part.counts();
  for (int p = 0; p < part.k(); ++p)
    if (counts[static_cast<std::size_t>(p)] == 0) throw EmptyCluster(p);
  IkscModel s;
  s.kernel = m.kernel;
  s.options = opt;
  s.centroids = Eigen::MatrixXd::Zero(part.k(), train_points.cols());
  s.alpha_centroids = Eigen::MatrixXd::Zero(part.k(), m.alphas.cols());
  for (Eigen::Index i = 0; i < train_points.rows(); ++i) {
    s.centroids.row(part[static_cast<std::size_t>(i)]) += train_points.row(i);
    s.alpha_centroids.row(part[static_cast<std::size_t>(i)]) += m.alphas.row(i);
  }
  for (int p = 0; p < part.k(); ++p) {
    const double n = counts[static_cast<std::size_t>(p)];
    s.centroids.row(p) /= n;
    s.alpha_centroids.row(p) /= n;
    s.counts.push_back(n);
    s.ids.push_back(p);
    s.last_update.push_back(0);
  }
  s.next_id = part.k();
  s.eigenvalues = m.eigenvalues;
  s.biases = m.biases;
  if (opt.eps_deg) {
    s.eps_deg = *opt.eps_deg;
    s.calibrated = true;
  }
  return s;
}

inline IkscModel init_iksc(const KscFit& fit, const DataMatrix& train_points, const IkscOptions& opt = {}) {
  return init_iksc(fit, train_points, fit.train_labels, opt);
}

/// Kernel row of x against the input centroids.
inline Eigen::VectorXd centroid_kernel_row(const IkscModel& s, const Eigen::RowVectorXd& x) {
  Eigen::VectorXd row(s.k());
  for (int p = 0; p < s.k(); ++p) row(p) = kernel_eval(s.kernel, x, s.centroids.row(p));
  return row;
}

/// Weight of each centroid in the out-of-sample sums: the number of points it
/// stands for, capped like the centroid step.
inline Eigen::VectorXd centroid_weights(const IkscModel& s) {
  Eigen::VectorXd w(s.k());
  for (int p = 0; p < s.k(); ++p) {
    const double n = s.counts[static_cast<std::size_t>(p)];
    w(p) = s.options.count_cap > 0.0 ? std::min(n, s.options.count_cap) : n;
  }
  return w;
}

/// Model-based out-of-sample eigenvector: e = row * C_alpha + b over the
/// count-weighted centroid row, scaled by 1 / (lambda d) per direction.
inline Eigen::RowVectorXd iksc_alpha(const IkscModel& s, const Eigen::VectorXd& krow) {
  if (!s.options.model_scaling) {
    // Similarities under the birth threshold count as none.
    Eigen::VectorXd w = (krow.array() >= s.eps_deg).select(krow, 0.0);
    if (w.sum() <= 0.0) w = krow;
    return w.transpose() * s.alpha_centroids / w.sum();
  }
  const Eigen::VectorXd w = krow.cwiseProduct(centroid_weights(s));
  const double d = w.sum();
  Eigen::RowVectorXd e = w.transpose() * s.alpha_centroids + s.biases.transpose();
  return e.cwiseQuotient(s.eigenvalues.transpose()) / d;
}

/// Sets eps_deg from the calibration prefix of a stream.
inline void calibrate_iksc(IkscModel& s, const DataMatrix& prefix) {
  if (prefix.rows() == 0) throw ValidationError("calibrate_iksc: empty prefix");
  std::vector<double> deg;
  for (Eigen::Index i = 0; i < prefix.rows(); ++i) deg.push_back(centroid_kernel_row(s, prefix.row(i)).sum());
  std::sort(deg.begin(), deg.end());
  const auto at = static_cast<std::size_t>(std::floor(s.options.eps_quantile * static_cast<double>(deg.size() - 1)));
  s.eps_deg = s.options.eps_scale * deg[at];
  s.calibrated = true;
}

namespace detail {

inline void drop_cluster(IkscModel& s, int p) {
  const auto remove_row = [p](Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows() - 1, m.cols());
    out << m.topRows(p), m.bottomRows(m.rows() - p - 1);
    m = std::move(out);
  };
  remove_row(s.centroids);
  remove_row(s.alpha_centroids);
  s.counts.erase(s.counts.begin() + p);
  s.ids.erase(s.ids.begin() + p);
  s.last_update.erase(s.last_update.begin() + p);
}

/// A newborn cluster gets its own eigenspace axis: existing centroids sit at 0
/// on it and the newborn sits on it at the typical centroid norm.
inline void birth(IkscModel& s, const Eigen::RowVectorXd& x) {
  double scale = 0.0;
  for (int p = 0; p < s.k(); ++p) scale += s.alpha_centroids.row(p).norm();
  scale = s.k() > 0 ? scale / s.k() : 1.0;
  if (scale <= 0.0) scale = 1.0;
  const int k = s.k();
  const int dim = s.dim();
  s.centroids.conservativeResize(k + 1, Eigen::NoChange);
  s.centroids.row(k) = x;
  s.alpha_centroids.conservativeResize(k + 1, dim + 1);
  s.alpha_centroids.col(dim).setZero();
  s.alpha_centroids.row(k).setZero();
  s.alpha_centroids(k, dim) = scale;
  s.eigenvalues.conservativeResize(dim + 1);
  s.eigenvalues(dim) = 1.0;
  s.biases.conservativeResize(dim + 1);
  s.biases(dim) = 0.0;
  s.counts.push_back(1.0);
  s.ids.push_back(s.next_id++);
  s.last_update.push_back(s.seen - 1);
}

inline double cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  return na > 0.0 && nb > 0.0 ? a.dot(b) / (na * nb) : 0.0;
}

}  // namespace detail

struct IkscStep {
  int cluster = -1;  // stable id of the assigned cluster
  std::vector<IkscEvent> events;
};

/// One stream point: birth check, assignment, centroid update, merges, deaths.
inline IkscStep iksc_update(IkscModel& s, const Eigen::RowVectorXd& x) {
  if (!s.calibrated) throw ValidationError("iksc_update: eps_deg not calibrated");
  if (x.size() != s.centroids.cols()) throw ValidationError("iksc_update: dimension mismatch");
  IkscStep out;
  const long now = s.seen++;
  const Eigen::VectorXd krow = centroid_kernel_row(s, x);
  int p = -1;
  if (s.k() == 0 || krow.sum() < s.eps_deg) {
    detail::birth(s, x);
    p = s.k() - 1;
    out.events.push_back({now, IkscEventKind::Birth, s.ids[static_cast<std::size_t>(p)], -1, 1.0});
  } else {
    const Eigen::RowVectorXd a = iksc_alpha(s, krow);
    Eigen::Index best = 0;
    (s.alpha_centroids.rowwise() - a).rowwise().squaredNorm().minCoeff(&best);
    p = static_cast<int>(best);
    const double n_old = s.counts[static_cast<std::size_t>(p)];
    const auto capped = [n_old](double cap) { return cap > 0.0 ? std::min(n_old, cap) : n_old; };
    s.alpha_centroids.row(p) += (a - s.alpha_centroids.row(p)) / capped(s.options.count_cap);
    s.centroids.row(p) += (x - s.centroids.row(p)) / capped(s.options.input_count_cap);
    s.counts[static_cast<std::size_t>(p)] += 1.0;
    s.last_update[static_cast<std::size_t>(p)] = now;
  }
  out.cluster = s.ids[static_cast<std::size_t>(p)];

  for (bool merged = true; merged;) {
    merged = false;
    for (int i = 0; i < s.k() && !merged; ++i)
      for (int j = i + 1; j < s.k() && !merged; ++j) {
        if (detail::cosine(s.alpha_centroids.row(i), s.alpha_centroids.row(j)) <= s.options.tau_merge) continue;
        const double ni = s.counts[static_cast<std::size_t>(i)], nj = s.counts[static_cast<std::size_t>(j)];
        // The larger cluster keeps its id.
        const int keep = ni >= nj ? i : j, gone = ni >= nj ? j : i;
        s.centroids.row(keep) = (ni * s.centroids.row(i) + nj * s.centroids.row(j)) / (ni + nj);
        s.alpha_centroids.row(keep) = (ni * s.alpha_centroids.row(i) + nj * s.alpha_centroids.row(j)) / (ni + nj);
        s.counts[static_cast<std::size_t>(keep)] = ni + nj;
        s.last_update[static_cast<std::size_t>(keep)] =
            std::max(s.last_update[static_cast<std::size_t>(i)], s.last_update[static_cast<std::size_t>(j)]);
        out.events.push_back({now, IkscEventKind::Merge, s.ids[static_cast<std::size_t>(keep)],
                              s.ids[static_cast<std::size_t>(gone)], ni + nj});
        if (s.ids[static_cast<std::size_t>(gone)] == out.cluster) out.cluster = s.ids[static_cast<std::size_t>(keep)];
        detail::drop_cluster(s, gone);
        merged = true;
      }
  }

  for (int q = s.k() - 1; q >= 0; --q)
    if (now - s.last_update[static_cast<std::size_t>(q)] >= s.options.death_horizon) {
      // Clusters too small to survive the final pruning retire as outliers.
      const double n = s.counts[static_cast<std::size_t>(q)];
      out.events.push_back({now, n < s.options.min_size ? IkscEventKind::Outlier : IkscEventKind::Death,
                            s.ids[static_cast<std::size_t>(q)], -1, n});
      detail::drop_cluster(s, q);
    }
  return out;
}

struct StreamReport {
  std::vector<int> assignments;  // stable cluster id per point, after outlier pruning
  std::vector<IkscEvent> events;
  std::vector<double> running_ari;  // cumulative ARI after each point, when truth is given
  std::optional<double> msv;
  int final_k = 0;
  double retired = 0.0;  // counts removed by death or outlier pruning

  /// Assignments as a compact partition; pruned points form their own group.
  Partition partition() const {
    std::vector<int> shifted(assignments);
    for (auto& a : shifted) ++a;
    return Partition::from_labels(std::move(shifted)).compacted();
  }

  int count(IkscEventKind kind) const {
    return static_cast<int>(std::count_if(events.begin(), events.end(), [kind](const IkscEvent& e) { return e.kind == kind; }));
  }
};

namespace detail {

/// Assignments follow merges: points of an absorbed cluster report the survivor.
inline void resolve_merges(StreamReport& r) {
  std::vector<std::pair<int, int>> merges;
  for (const auto& e : r.events)
    if (e.kind == IkscEventKind::Merge) merges.push_back({e.other, e.cluster});
  for (auto& a : r.assignments)
    for (const auto& [from, to] : merges)
      if (a == from) a = to;
}

inline std::vector<int> compact_labels(std::vector<int> a) {
  return Partition::from_labels(std::move(a)).compacted().labels();
}

}  // namespace detail

/// Runs the stream in order, then prunes clusters smaller than min_size.
/// Pruned points are reported with cluster id -1. Running ARI is computed
/// over the points seen so far, with merged clusters already resolved.
inline StreamReport run_stream(IkscModel& s, const DataMatrix& batch, const std::optional<Partition>& truth = {},
                               bool track_ari = false) {
  if (truth && static_cast<Eigen::Index>(truth->size()) != batch.rows()) throw ValidationError("run_stream: truth size mismatch");
  if (!s.calibrated) calibrate_iksc(s, batch.topRows(std::min<Eigen::Index>(batch.rows(), s.options.calibration)));
  StreamReport r;
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    IkscStep step = iksc_update(s, batch.row(i));
    r.assignments.push_back(step.cluster);
    for (auto& e : step.events) {
      if (e.kind == IkscEventKind::Death || e.kind == IkscEventKind::Outlier) r.retired += e.size;
      r.events.push_back(e);
    }
    if (truth && track_ari) {
      StreamReport tmp{r.assignments, r.events, {}, {}, 0, 0.0};
      detail::resolve_merges(tmp);
      const auto n = static_cast<std::size_t>(i + 1);
      std::vector<int> t(truth->labels().begin(), truth->labels().begin() + static_cast<long>(n));
      r.running_ari.push_back(ari(Partition::from_labels(detail::compact_labels(tmp.assignments)),
                                  Partition::from_labels(detail::compact_labels(t))));
    }
  }
  detail::resolve_merges(r);
  const long end = s.seen;
  for (int q = s.k() - 1; q >= 0; --q)
    if (s.counts[static_cast<std::size_t>(q)] < s.options.min_size) {
      const int id = s.ids[static_cast<std::size_t>(q)];
      r.events.push_back({end, IkscEventKind::Outlier, id, -1, s.counts[static_cast<std::size_t>(q)]});
      r.retired += s.counts[static_cast<std::size_t>(q)];
      for (auto& a : r.assignments)
        if (a == id) a = -1;
      detail::drop_cluster(s, q);
    }
  r.final_k = s.k();
  return r;
}

/// Incremental k-means baseline: each batch runs Lloyd iterations warm-started
/// from the previous centroids (k-means++ on the first batch), then every
/// centroid folds its batch members into a count-weighted running mean.
struct IncrementalKmeansReport {
  std::vector<int> assignments;
  std::vector<Eigen::MatrixXd> centroids;  // after each batch
};

inline IncrementalKmeansReport incremental_kmeans(const std::vector<DataMatrix>& batches, int k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("incremental_kmeans: k must be >= 1");
  IncrementalKmeansReport r;
  Eigen::MatrixXd c;
  Eigen::VectorXd n;
  for (const auto& b : batches) {
    if (b.rows() == 0) continue;
    const bool first = c.size() == 0;
    const KmeansResult km = first ? kmeans(b, k, seed) : kmeans_from(b, c);
    if (first) {
      c = km.centroids;
      n = Eigen::VectorXd::Zero(c.rows());
      for (std::size_t i = 0; i < km.labels.size(); ++i) n(km.labels[i]) += 1.0;
    } else {
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(c.rows(), c.cols());
      Eigen::VectorXd m = Eigen::VectorXd::Zero(c.rows());
      for (std::size_t i = 0; i < km.labels.size(); ++i) {
        sum.row(km.labels[i]) += b.row(static_cast<Eigen::Index>(i));
        m(km.labels[i]) += 1.0;
      }
      for (Eigen::Index p = 0; p < c.rows(); ++p)
        if (m(p) > 0.0) {
          c.row(p) = (n(p) * c.row(p) + sum.row(p)) / (n(p) + m(p));
          n(p) += m(p);
        }
    }
    for (std::size_t i = 0; i < km.labels.size(); ++i) r.assignments.push_back(km.labels[i]);
    r.centroids.push_back(c);
  }
  return r;
}

}  // namespace speclust
