#include <gtest/gtest.h>

#include "speclust.hpp"
#include "test_util.hpp"

using namespace speclust;

namespace {

struct Trained {
  DataMatrix X;
  KscFit fit;
};

Trained two_blobs(std::uint64_t seed, int per = 40) {
  const auto d = testutil::blobs(seed, per, 2, 0.3);
  return {d.data, train_ksc(KernelSpec::rbf(1.0), d.data, 2)};
}

IkscOptions fixed_eps(double eps) {
  IkscOptions o;
  o.eps_deg = eps;
  return o;
}

}  // namespace

TEST(InitIksc, OnePointPerClusterGivesThosePoints) {
  const auto t = two_blobs(1);
  // Any partition works for the centroid means; pick singletons plus one bulk cluster.
  const int n = static_cast<int>(t.X.rows());
  std::vector<int> l(static_cast<std::size_t>(n), 2);
  l[0] = 0;
  l[static_cast<std::size_t>(n - 1)] = 1;
  const IkscModel m = init_iksc(t.fit, t.X, Partition(l, 3), fixed_eps(0.0));
  EXPECT_EQ(m.centroids.row(0), t.X.row(0));
  EXPECT_EQ(m.centroids.row(1), t.X.row(n - 1));
  EXPECT_EQ(m.alpha_centroids.row(0), t.fit.model.alphas.row(0));
  EXPECT_EQ(m.counts[0], 1.0);
}

TEST(InitIksc, CountsMeansAndSigns) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto t = two_blobs(seed);
    const IkscModel m = init_iksc(t.fit, t.X);
    ASSERT_EQ(m.k(), 2);
    EXPECT_DOUBLE_EQ(m.counts[0] + m.counts[1], static_cast<double>(t.X.rows()));
    EXPECT_LT(m.alpha_centroids(0, 0) * m.alpha_centroids(1, 0), 0.0) << "seed " << seed;
    EXPECT_FALSE(m.calibrated);
    for (int p = 0; p < 2; ++p) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(t.X.cols());
      for (Eigen::Index i = 0; i < t.X.rows(); ++i)
        if (t.fit.train_labels[static_cast<std::size_t>(i)] == p) mean += t.X.row(i);
      EXPECT_LE((m.centroids.row(p) - mean / m.counts[static_cast<std::size_t>(p)]).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_EQ(m.eigenvalues, t.fit.model.eigenvalues);
    EXPECT_EQ(m.biases, t.fit.model.biases);
  }
}

TEST(InitIksc, Errors) {
  const auto t = two_blobs(2);
  std::vector<int> l(static_cast<std::size_t>(t.X.rows()), 0);
  EXPECT_THROW(init_iksc(t.fit, t.X, Partition(l, 2)), EmptyCluster);
  EXPECT_THROW(init_iksc(t.fit, t.X.topRows(5)), ValidationError);
}

TEST(IkscUpdate, UncalibratedAndDimensionErrors) {
  const auto t = two_blobs(3);
  IkscModel m = init_iksc(t.fit, t.X);
  EXPECT_THROW(iksc_update(m, t.X.row(0)), ValidationError);
  calibrate_iksc(m, t.X);
  EXPECT_TRUE(m.calibrated);
  EXPECT_THROW(iksc_update(m, Eigen::RowVector3d(0, 0, 0)), ValidationError);
  EXPECT_THROW(calibrate_iksc(m, DataMatrix(0, 2)), ValidationError);
}

TEST(IkscUpdate, PointAtCentroidLeavesItFixed) {
  const auto t = two_blobs(4);
  IkscModel m = init_iksc(t.fit, t.X, fixed_eps(1e-6));
  const Eigen::RowVectorXd c1 = m.centroids.row(1);
  const double n1 = m.counts[1];
  const IkscStep s = iksc_update(m, c1);
  EXPECT_EQ(s.cluster, m.ids[1]);
  EXPECT_TRUE(s.events.empty());
  EXPECT_EQ(m.centroids.row(1), c1);
  EXPECT_EQ(m.counts[1], n1 + 1.0);
}

TEST(IkscUpdate, SingletonCentroidJumpsToNewPoint) {
  const auto t = two_blobs(5);
  const int n = static_cast<int>(t.X.rows());
  std::vector<int> l(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) l[static_cast<std::size_t>(i)] = t.fit.train_labels[static_cast<std::size_t>(i)];
  // Make cluster 1 a single point of its own blob.
  int keep = -1;
  for (int i = 0; i < n; ++i)
    if (l[static_cast<std::size_t>(i)] == 1) {
      if (keep < 0) keep = i;
      else l[static_cast<std::size_t>(i)] = 0;
    }
  IkscModel m = init_iksc(t.fit, t.X, Partition(l, 2), fixed_eps(1e-6));
  ASSERT_EQ(m.counts[1], 1.0);
  const Eigen::RowVectorXd x = t.X.row(keep) + Eigen::RowVector2d(0.05, -0.05);
  const IkscStep s = iksc_update(m, x);
  ASSERT_EQ(s.cluster, m.ids[1]);
  EXPECT_LE((m.centroids.row(1) - x).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(IkscUpdate, SequentialUpdatesEqualWeightedBatchMean) {
  const auto t = two_blobs(6);
  IkscOptions o = fixed_eps(1e-9);
  o.count_cap = 0.0;
  o.death_horizon = 1 << 30;
  IkscModel m = init_iksc(t.fit, t.X, o);
  const Eigen::RowVectorXd c0 = m.centroids.row(0);
  const double n0 = m.counts[0];
  // Points near centroid 0 that stay in cluster 0.
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 0.05);
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(2);
  int fed = 0;
  for (int i = 0; i < 30; ++i) {
    const Eigen::RowVectorXd x = c0 + Eigen::RowVector2d(g(rng), g(rng));
    const IkscStep s = iksc_update(m, x);
    ASSERT_EQ(s.cluster, m.ids[0]);
    sum += x;
    ++fed;
  }
  // C += (x - C) / n_old weighs the initial centroid as n0 - 1 points (n_old = 1 jumps to x).
  const Eigen::RowVectorXd oracle = ((n0 - 1) * c0 + sum) / (n0 - 1 + fed);
  EXPECT_LE((m.centroids.row(0) - oracle).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(m.counts[0], n0 + fed);
}

TEST(IkscAlpha, ModelScalingFormulaIdentity) {
  const auto t = two_blobs(7);
  IkscOptions o = fixed_eps(0.0);
  o.model_scaling = true;
  const IkscModel m = init_iksc(t.fit, t.X, o);
  for (Eigen::Index i = 0; i < t.X.rows(); i += 7) {
    const Eigen::VectorXd krow = centroid_kernel_row(m, t.X.row(i));
    Eigen::VectorXd w(m.k());
    for (int p = 0; p < m.k(); ++p) w(p) = krow(p) * std::min(m.counts[static_cast<std::size_t>(p)], o.count_cap);
    const Eigen::RowVectorXd e = w.transpose() * m.alpha_centroids + m.biases.transpose();
    const Eigen::RowVectorXd a = iksc_alpha(m, krow);
    for (int l = 0; l < m.dim(); ++l) EXPECT_NEAR(a(l), e(l) / (m.eigenvalues(l) * w.sum()), 1e-12);
  }
}

TEST(IkscAlpha, InterpolationStaysInCentroidHull) {
  const auto t = two_blobs(8);
  IkscModel m = init_iksc(t.fit, t.X);
  calibrate_iksc(m, t.X);
  const double lo = m.alpha_centroids.col(0).minCoeff(), hi = m.alpha_centroids.col(0).maxCoeff();
  for (Eigen::Index i = 0; i < t.X.rows(); ++i) {
    const Eigen::RowVectorXd a = iksc_alpha(m, centroid_kernel_row(m, t.X.row(i)));
    EXPECT_GE(a(0), lo - 1e-12);
    EXPECT_LE(a(0), hi + 1e-12);
  }
}

TEST(IkscUpdate, FarPointIsBornAndMergesByCosine) {
  const auto t = two_blobs(9);
  IkscModel m = init_iksc(t.fit, t.X, fixed_eps(1e-3));
  const IkscStep s = iksc_update(m, Eigen::RowVector2d(500, 500));
  ASSERT_EQ(s.events.size(), 1u);
  EXPECT_EQ(s.events[0].kind, IkscEventKind::Birth);
  EXPECT_EQ(s.events[0].index, 0);
  EXPECT_EQ(m.k(), 3);
  EXPECT_EQ(m.dim(), 2);
  EXPECT_EQ(s.cluster, 2);
  EXPECT_EQ(m.next_id, 3);
  // Newborn axis is orthogonal to the old centroids.
  EXPECT_EQ(m.alpha_centroids(0, 1), 0.0);
  EXPECT_GT(m.alpha_centroids(2, 1), 0.0);

  // Force two centroids parallel: they merge into a count-weighted mean.
  IkscModel q = init_iksc(t.fit, t.X, fixed_eps(1e-3));
  q.alpha_centroids.row(1) = 2.0 * q.alpha_centroids.row(0);
  const double n0 = q.counts[0], n1 = q.counts[1];
  const Eigen::RowVectorXd c0 = q.centroids.row(0), c1 = q.centroids.row(1);
  const IkscStep r = iksc_update(q, c0);
  ASSERT_EQ(q.k(), 1);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, IkscEventKind::Merge);
  EXPECT_DOUBLE_EQ(q.counts[0], n0 + n1 + 1.0);
  const double a0 = r.cluster == 0 ? n0 + 1 : n0, a1 = n0 + n1 + 1 - a0;
  EXPECT_LE((q.centroids.row(0) - (a0 * c0 + a1 * c1) / (a0 + a1)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IkscUpdate, DeathAfterHorizon) {
  const auto t = two_blobs(10);
  IkscOptions o = fixed_eps(1e-6);
  o.death_horizon = 20;
  IkscModel m = init_iksc(t.fit, t.X, o);
  const Eigen::RowVectorXd c0 = m.centroids.row(0);
  const int quiet = m.ids[1];
  std::vector<IkscEvent> ev;
  for (int i = 0; i < 25; ++i)
    for (auto& e : iksc_update(m, c0).events) ev.push_back(e);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, IkscEventKind::Death);
  EXPECT_EQ(ev[0].cluster, quiet);
  EXPECT_EQ(ev[0].index, 20);
  EXPECT_EQ(m.k(), 1);
}

TEST(RunStream, CountsInvariantAndReplay) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    DriftOptions d;
    d.points_per_cluster = 30;
    d.outliers = 4;
    const auto seq = gen_drift_sequence("multi_merge", 12, seed, d);
    SnapshotSequence rest;
    rest.steps.assign(seq.steps.begin() + 1, seq.steps.end());
    const auto st = flatten_sequence(rest, seed);
    const DataMatrix X0 = *seq.steps[0].points;
    const KscFit fit = train_ksc(KernelSpec::rbf(2.0), X0, 3);
    IkscOptions o;
    o.death_horizon = 150;
    IkscModel m = init_iksc(fit, X0, o);
    IkscModel copy = m;
    const StreamReport r = run_stream(m, st.points, st.truth, true);
    double live = 0.0;
    for (double c : m.counts) live += c;
    EXPECT_NEAR(live + r.retired, static_cast<double>(X0.rows() + st.points.rows()), 1e-9) << "seed " << seed;
    EXPECT_EQ(r.assignments.size(), static_cast<std::size_t>(st.points.rows()));
    EXPECT_EQ(r.running_ari.size(), r.assignments.size());
    EXPECT_EQ(r.final_k, m.k());
    for (double c : m.counts) EXPECT_GE(c, o.min_size);
    for (std::size_t i = 1; i < r.events.size(); ++i) EXPECT_LE(r.events[i - 1].index, r.events[i].index);

    const StreamReport again = run_stream(copy, st.points, st.truth, true);
    EXPECT_EQ(again.assignments, r.assignments);
    EXPECT_EQ(again.running_ari, r.running_ari);
    EXPECT_EQ(again.events.size(), r.events.size());
    EXPECT_EQ(copy.centroids, m.centroids);
    EXPECT_EQ(copy.alpha_centroids, m.alpha_centroids);
  }
}

TEST(RunStream, StationaryStreamHasNoEvents) {
  int quiet = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto train = testutil::blobs(seed, 40, 3, 0.3);
    const KscFit fit = train_ksc(KernelSpec::rbf(1.0), train.data, 3);
    auto stream = testutil::blobs(seed + 1000, 100, 3, 0.3);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(stream.data.rows()));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    DataMatrix X(stream.data.rows(), stream.data.cols());
    for (std::size_t i = 0; i < order.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = stream.data.row(order[i]);
    IkscModel m = init_iksc(fit, train.data);
    const StreamReport r = run_stream(m, X);
    quiet += r.events.empty() && r.final_k == 3;
  }
  EXPECT_GE(quiet, 9);
}

TEST(RunStream, OutlierBurstIsPrunedAtTheEnd) {
  const auto t = two_blobs(11);
  IkscModel m = init_iksc(t.fit, t.X, fixed_eps(1e-3));
  DataMatrix X(3, 2);
  X << 900, 900, 900.01, 900, t.X(0, 0), t.X(0, 1);
  const StreamReport r = run_stream(m, X);
  EXPECT_EQ(r.count(IkscEventKind::Birth), 1);
  EXPECT_EQ(r.count(IkscEventKind::Outlier), 1);
  EXPECT_EQ(r.assignments[0], -1);
  EXPECT_EQ(r.assignments[1], -1);
  EXPECT_GE(r.assignments[2], 0);
  EXPECT_DOUBLE_EQ(r.retired, 2.0);
  EXPECT_EQ(r.final_k, 2);
  EXPECT_EQ(r.partition().k(), 2);
}

TEST(IncrementalKmeans, SingleClusterIsRunningMean) {
  std::mt19937_64 rng(12);
  std::vector<DataMatrix> batches;
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(3);
  double n = 0;
  for (int b = 0; b < 6; ++b) {
    batches.push_back(testutil::random_points(rng, 10 + b, 3, 1.0 + b));
    sum += batches.back().colwise().sum();
    n += static_cast<double>(batches.back().rows());
    const auto r = incremental_kmeans(batches, 1, 0);
    EXPECT_LE((r.centroids.back().row(0) - sum / n).cwiseAbs().maxCoeff(), 1e-12) << "batch " << b;
  }
  EXPECT_THROW(incremental_kmeans(batches, 0, 0), ValidationError);
}

TEST(IncrementalKmeans, StaticStreamConverges) {
  std::vector<DataMatrix> batches;
  for (int b = 0; b < 30; ++b) batches.push_back(testutil::blobs(77, 30, 3, 0.3).data);
  const auto r = incremental_kmeans(batches, 3, 1);
  ASSERT_EQ(r.centroids.size(), 30u);
  EXPECT_LT((r.centroids[29] - r.centroids[28]).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(r.assignments.size(), 30u * 90u);
}
