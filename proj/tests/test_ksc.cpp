#include <gtest/gtest.h>

#include "speclust.hpp"
#include "test_util.hpp"

using namespace speclust;

namespace {

KernelMatrix block_kernel() {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(10, 10);
  m.topLeftCorner(5, 5).setOnes();
  m.bottomRightCorner(5, 5).setOnes();
  return {m, true};
}

/// Mix of RBF, cosine-free and dense community kernels, all with positive degrees.
KernelMatrix random_kernel(std::mt19937_64& rng, int trial) {
  std::uniform_int_distribution<int> size(8, 40);
  const int n = size(rng);
  switch (trial % 3) {
    case 0:
      return kernel_matrix(KernelSpec::rbf(1.0 + trial % 5), testutil::random_points(rng, n, 3, 2.0));
    case 1: {
      const Eigen::MatrixXd a = testutil::random_points(rng, n, n).cwiseAbs();
      return {0.5 * (a + a.transpose()), true};
    }
    default:
      return community_kernel(testutil::random_graph(rng, n, 0.6));
  }
}

}  // namespace

TEST(TrainKsc, BlockDiagonalKernel) {
  const KscFit fit = train_ksc(block_kernel(), 2);
  const Eigen::VectorXd a = fit.model.alphas.col(0);
  for (int i = 1; i < 5; ++i) {
    EXPECT_NEAR(a(i), a(0), 1e-10);
    EXPECT_NEAR(a(5 + i), a(5), 1e-10);
  }
  EXPECT_LT(a(0) * a(5), 0.0);
  const Partition blocks({0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, 2);
  EXPECT_DOUBLE_EQ(ari(fit.train_labels, blocks), 1.0);
}

TEST(TrainKsc, KEqualsTwoStructure) {
  std::mt19937_64 rng(2);
  const KscFit fit = train_ksc(KernelSpec::rbf(1.0), testutil::random_points(rng, 30, 2), 2);
  EXPECT_EQ(fit.model.alphas.cols(), 1);
  EXPECT_EQ(fit.train_scores.cols(), 1);
  ASSERT_EQ(fit.model.codebook.rows(), 2);
  std::set<int> cw{fit.model.codebook(0, 0), fit.model.codebook(1, 0)};
  EXPECT_EQ(cw, (std::set<int>{-1, 1}));
}

TEST(TrainKsc, ThreeSeparatedBlobs) {
  const auto d = testutil::blobs(4);
  const KscFit fit = train_ksc(KernelSpec::rbf(2.0), d.data, 3);
  EXPECT_DOUBLE_EQ(ari(fit.train_labels, d.truth), 1.0);
}

TEST(TrainKsc, Errors) {
  EXPECT_THROW(train_ksc(block_kernel(), 1), ValidationError);
  EXPECT_THROW(train_ksc(block_kernel(), 11), ValidationError);
  KernelMatrix z = block_kernel();
  z.values.row(3).setZero();
  z.values.col(3).setZero();
  try {
    train_ksc(z, 2);
    FAIL();
  } catch (const ZeroDegreeRow& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
  }
  const Eigen::MatrixXd two_patterns = (Eigen::MatrixXd(4, 2) << 1, 1, 2, 1, -1, 1, -3, 2).finished();
  EXPECT_THROW(detail::frequent_sign_patterns(two_patterns, 3), DegenerateCodebook);
}

TEST(TrainKsc, SpectralInvariantsOnRandomKernels) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const KernelMatrix K = random_kernel(rng, trial);
    const int k = 2 + trial % 3;
    KscFit fit;
    try {
      fit = train_ksc(K, k);
    } catch (const DegenerateCodebook&) {
      // eigenpairs are still checked through the two-cluster model
      fit = train_ksc(K, 2);
    }
    const KscModel& m = fit.model;
    const Eigen::MatrixXd op = ksc_operator(K);
    for (Eigen::Index l = 0; l < m.alphas.cols(); ++l) {
      const Eigen::VectorXd a = m.alphas.col(l);
      EXPECT_NEAR(a.norm(), 1.0, 1e-12);
      EXPECT_LE((op * a - m.eigenvalues(l) * a).norm(), 1e-8) << "trial " << trial;
      EXPECT_LE(std::abs(a.sum()), 1e-8 * a.norm()) << "trial " << trial;
      if (l > 0) {
        EXPECT_GE(m.eigenvalues(l - 1), m.eigenvalues(l));
      }
    }
    for (Eigen::Index p = 0; p < m.codebook.rows(); ++p)
      for (Eigen::Index q = p + 1; q < m.codebook.rows(); ++q) EXPECT_NE(m.codebook.row(p), m.codebook.row(q));
    // out-of-sample consistency
    EXPECT_EQ(assign_hamming(project(m, K), m.codebook), fit.train_labels);
  }
}

TEST(TrainKsc, NonSymmetricKernelUsesGeneralSolver) {
  Eigen::MatrixXd m = block_kernel().values;
  m(0, 1) = 0.9;  // slight asymmetry
  const KscFit fit = train_ksc(KernelMatrix{m, false}, 2);
  const Eigen::VectorXd a = fit.model.alphas.col(0);
  EXPECT_LE((ksc_operator(KernelMatrix{m, false}) * a - fit.model.eigenvalues(0) * a).norm(), 1e-8);
}

TEST(TrainKsc, PermutationEquivariance) {
  const auto d = testutil::blobs(7, 25);
  std::vector<int> perm(static_cast<std::size_t>(d.data.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(perm.begin(), perm.end(), rng);
  const KscFit a = train_ksc(KernelSpec::rbf(2.0), d.data, 3);
  const KscFit b = train_ksc(KernelSpec::rbf(2.0), take_rows(d.data, perm), 3);
  std::vector<int> back(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) back[i] = a.train_labels[static_cast<std::size_t>(perm[i])];
  EXPECT_DOUBLE_EQ(ari(Partition(back, 3), b.train_labels), 1.0);
}

TEST(Project, Examples) {
  const auto d = testutil::blobs(3, 20);
  const KscFit fit = train_ksc(KernelSpec::rbf(2.0), d.data, 3);
  const KernelMatrix Ktr = kernel_matrix(fit.model.kernel, d.data);
  EXPECT_LE((project(fit.model, Ktr) - fit.train_scores).cwiseAbs().maxCoeff(), 0.0);
  const KernelMatrix zero{Eigen::MatrixXd::Zero(1, d.data.rows()), false};
  EXPECT_EQ(project(fit.model, zero).row(0), fit.model.biases.transpose());
  // one-row products may sum in a different order than the full product
  const ScoreMatrix dup = project_points(fit.model, d.data.row(3));
  EXPECT_LE((dup.row(0) - fit.train_scores.row(3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(project_points(fit.model, d.data.row(3)), dup);
  EXPECT_THROW(project(fit.model, KernelMatrix{Eigen::MatrixXd::Zero(1, 4), false}), ValidationError);
}

TEST(AssignHamming, Examples) {
  Codebook cb(3, 2);
  cb << 1, 1, -1, 1, -1, -1;
  ScoreMatrix s(3, 2);
  s << -0.5, -2.0,  // matches codeword 2
      0.0, -1.0,    // sign(0)=+1 gives (+,-): distance 1 to c0 and c2, tie to 0
      -3.0, 0.1;
  EXPECT_EQ(assign_hamming(s, cb).labels(), (std::vector<int>{2, 0, 1}));
}

TEST(AssignHamming, MatchesBruteForce) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> bit(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Codebook cb(4, 3);
    for (Eigen::Index i = 0; i < cb.size(); ++i) cb.data()[i] = bit(rng) ? 1 : -1;
    const ScoreMatrix s = testutil::random_points(rng, 30, 3);
    const Partition got = assign_hamming(s, cb);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      int best = -1, best_d = 99;
      for (int p = 0; p < 4; ++p) {
        int dist = 0;
        for (int j = 0; j < 3; ++j) dist += (s(i, j) >= 0 ? 1 : -1) != cb(p, j);
        if (dist < best_d) best_d = dist, best = p;
      }
      EXPECT_EQ(got[static_cast<std::size_t>(i)], best);
    }
  }
}

TEST(ClassicalSc, Examples) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(8, 8);
  s.topLeftCorner(4, 4).setOnes();
  s.bottomRightCorner(4, 4).setOnes();
  const Partition comps({0, 0, 0, 0, 1, 1, 1, 1}, 2);
  for (auto lap : {Laplacian::Unnormalized, Laplacian::Symmetric, Laplacian::RandomWalk}) {
    const Partition p = classical_sc(KernelMatrix{s, true}, 2, lap, 3);
    EXPECT_DOUBLE_EQ(ari(p, comps), 1.0);
    EXPECT_EQ(classical_sc(KernelMatrix{s, true}, 2, lap, 3), p);
  }
  EXPECT_EQ(classical_sc(KernelMatrix{s, true}, 1, Laplacian::Symmetric).nonempty_clusters(), 1);
  s(0, 1) = -1;
  EXPECT_THROW(classical_sc(KernelMatrix{s, true}, 2, Laplacian::Symmetric), ValidationError);
}

TEST(Prototypes, Examples) {
  ScoreMatrix s(3, 1);
  s << 1, 3, 7;
  const PrototypeSet ps = compute_prototypes(s, Partition({0, 0, 1}, 2));
  EXPECT_EQ(ps.prototypes(0, 0), 2.0);
  EXPECT_EQ(ps.prototypes(1, 0), 7.0);
  EXPECT_THROW(compute_prototypes(s, Partition({0, 0, 0}, 2)), EmptyCluster);

  std::mt19937_64 rng(4);
  const ScoreMatrix r = testutil::random_points(rng, 50, 2);
  const Partition part = testutil::random_partition(rng, 50, 3);
  const PrototypeSet q = compute_prototypes(r, part);
  for (int p = 0; p < 3; ++p) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(2);
    int n = 0;
    for (int i = 0; i < 50; ++i)
      if (part[static_cast<std::size_t>(i)] == p) sum += r.row(i), ++n;
    EXPECT_LE((q.prototypes.row(p) - sum / n).norm(), 1e-12);
  }
}

TEST(SoftAssign, Examples) {
  PrototypeSet ps{(Eigen::MatrixXd(3, 2) << 1, 0, 0, 1, -1, -1).finished(), {1, 1, 1}};
  ScoreMatrix s(2, 2);
  s << 0, 5,  // parallel to prototype 1
      0, 0;   // zero vector
  const SoftPartition sp = soft_assign(s, ps);
  EXPECT_EQ(sp.memberships.row(0), Eigen::RowVector3d(0, 1, 0));
  EXPECT_LE((sp.memberships.row(1) - Eigen::RowVector3d::Constant(1.0 / 3)).norm(), 1e-15);

  PrototypeSet two{(Eigen::MatrixXd(2, 1) << -1, 3).finished(), {1, 1}};
  const SoftPartition mid = soft_assign((ScoreMatrix(1, 1) << 1).finished(), two);
  EXPECT_DOUBLE_EQ(mid.memberships(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(mid.memberships(0, 1), 0.5);
}

TEST(SoftAssign, MatchesProductFormulaAndIsScaleInvariant) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 3 + trial % 3;
    PrototypeSet ps{testutil::random_points(rng, k, k - 1), std::vector<int>(static_cast<std::size_t>(k), 1)};
    const ScoreMatrix s = testutil::random_points(rng, 25, k - 1);
    const SoftPartition sp = soft_assign(s, ps);
    const SoftPartition scaled = soft_assign(s * 3.5, ps);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      std::vector<double> d(static_cast<std::size_t>(k));
      for (int p = 0; p < k; ++p)
        d[static_cast<std::size_t>(p)] = 1.0 - s.row(i).dot(ps.prototypes.row(p)) / (s.row(i).norm() * ps.prototypes.row(p).norm());
      std::vector<double> prod(static_cast<std::size_t>(k), 1.0);
      double total = 0.0;
      for (int q = 0; q < k; ++q) {
        for (int j = 0; j < k; ++j)
          if (j != q) prod[static_cast<std::size_t>(q)] *= d[static_cast<std::size_t>(j)];
        total += prod[static_cast<std::size_t>(q)];
      }
      for (int q = 0; q < k; ++q) EXPECT_NEAR(sp.memberships(i, q), prod[static_cast<std::size_t>(q)] / total, 1e-12);
      EXPECT_NEAR(sp.memberships.row(i).sum(), 1.0, 1e-10);
      EXPECT_LE((sp.memberships.row(i) - scaled.memberships.row(i)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Ams, Examples) {
  SoftPartition crisp{(Eigen::MatrixXd(3, 2) << 1, 0, 0, 1, 1, 0).finished()};
  EXPECT_DOUBLE_EQ(ams(crisp), 1.0);
  SoftPartition uniform{Eigen::MatrixXd::Constant(4, 2, 0.5)};
  EXPECT_EQ(ams(uniform), -std::numeric_limits<double>::infinity());
  SoftPartition mixed{(Eigen::MatrixXd(2, 2) << 0.5, 0.5, 0.2, 0.8).finished()};
  EXPECT_DOUBLE_EQ(ams(mixed), 0.65);
}

TEST(Sksc, MembershipRowsSumToOne) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = testutil::blobs(seed, 30, 3, 1.5);
    const KscFit fit = train_ksc(KernelSpec::rbf(2.0), d.data, 3);
    const KernelMatrix K = kernel_matrix(fit.model.kernel, d.data);
    const SoftPartition sp = sksc_full(fit.model, K, K);
    EXPECT_GE(sp.memberships.minCoeff(), 0.0);
    EXPECT_LE((sp.memberships.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
    EXPECT_GE(ari(sp.hard(), d.truth), ari(fit.train_labels, d.truth) - 0.05);
    const SoftPartition one = sksc_full(fit.model, K, kernel_matrix(fit.model.kernel, d.data.row(0), d.data));
    EXPECT_NEAR(one.memberships.sum(), 1.0, 1e-10);
  }
}

TEST(Sksc, AgreesWithKscOnSeparatedBlobs) {
  int agree = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = testutil::blobs(seed);
    const KscFit fit = train_ksc(KernelSpec::rbf(2.0), d.data, 3);
    const KernelMatrix K = kernel_matrix(fit.model.kernel, d.data);
    agree += ari(sksc_full(fit.model, K, K).hard(), fit.train_labels) == 1.0;
  }
  EXPECT_GE(agree, 9);
}

TEST(Blf, Examples) {
  // equal-size clusters on the three codeword axes, perfectly collinear
  ScoreMatrix s(6, 2);
  s << 1, 0, 2, 0, 0, 1, 0, 2, -1, -1, -2, -2;
  const Partition p({0, 0, 1, 1, 2, 2}, 3);
  EXPECT_DOUBLE_EQ(blf(s, p, 0.5), 1.0);
  ScoreMatrix one(5, 1);
  one << 1, 2, 3, -1, -2;
  EXPECT_DOUBLE_EQ(blf(one, Partition({0, 0, 0, 1, 1}, 2), 0.5), 0.5 + 0.5 * 2.0 / 3.0);
  EXPECT_EQ(blf(one, Partition({0, 0, 0, 0, 0}, 2), 0.5), failed_score);

  std::mt19937_64 rng(6);
  const ScoreMatrix blob = testutil::random_points(rng, 3000, 2);
  EXPECT_LT(linefit(blob, testutil::random_partition(rng, 3000, 3)), 0.2);
}

TEST(Blf, Bounds) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 2 + trial % 4;
    const ScoreMatrix s = testutil::random_points(rng, 40, k - 1);
    const Partition p = testutil::random_partition(rng, 40, k);
    const double v = blf(s, p, 0.5);
    if (v == failed_score) continue;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Select, SingleCellOrderAndFailures) {
  GridSpec g;
  g.ks = {3};
  g.params = {2.0};
  auto r = select(g, [](int, double) { return 0.25; });
  EXPECT_EQ(r.best_k, 3);
  EXPECT_EQ(r.best_param, 2.0);

  auto f = [](int k, double p) {
    if (k == 4) throw NumericalError("boom");
    return -std::abs(k - 3) - 0.01 * p + (k == 2 ? 0.5 : 0.0);
  };
  g.ks = {5, 2, 4, 3};
  g.params = {1.0, 0.5};
  const auto a = select(g, f);
  std::reverse(g.ks.begin(), g.ks.end());
  std::reverse(g.params.begin(), g.params.end());
  const auto b = select(g, f);
  EXPECT_EQ(a.best_k, b.best_k);
  EXPECT_EQ(a.best_param, b.best_param);
  EXPECT_EQ(a.best_k, 3);
  EXPECT_EQ(a.best_param, 0.5);
  int failed = 0;
  for (const auto& c : a.cells) failed += !c.ok();
  EXPECT_EQ(failed, 2);

  // ties go to the smaller k
  const auto t = select(g, [](int, double) { return 1.0; });
  EXPECT_EQ(t.best_k, 2);
  EXPECT_EQ(t.best_param, 0.5);
  EXPECT_THROW(select(g, [](int, double) -> double { throw NumericalError("x"); }), AllCandidatesFailed);
  g.ks.clear();
  EXPECT_THROW(select(g, f), ValidationError);
}

TEST(ModularitySelect, SentinelsAndSingleCluster) {
  const Graph g = testutil::karate();
  std::vector<ModularityCandidate> c;
  c.push_back({2, 1.0, testutil::karate_truth()});
  c.push_back({3, 1.0, std::nullopt});
  c.push_back({1, 1.0, Partition(std::vector<int>(34, 0), 1)});
  const auto r = modularity_select(c, g);
  EXPECT_EQ(r.best_k, 2);
  EXPECT_EQ(r.cells[0].score, 0.0);
  EXPECT_FALSE(r.cells[2].ok());
}

TEST(SelectPoints, SeparatedBlobsPickThree) {
  const auto d = testutil::blobs(5, 60);
  GridSpec g;
  g.ks = {2, 3, 4, 5};
  g.params = {1.0, 2.0, 3.0};
  g.train_fraction = 0.3;
  g.validation_fraction = 0.3;
  EXPECT_EQ(select_points(g, KernelKind::Rbf, d.data, 1).best_k, 3);
  g.criterion = Criterion::Blf;
  EXPECT_EQ(select_points(g, KernelKind::Rbf, d.data, 1).best_k, 3);
}
