#include <gtest/gtest.h>

#include "speclust.hpp"
#include "test_util.hpp"

using namespace speclust;

namespace {

/// Triple loop over unordered pairs of common neighbors.
Eigen::MatrixXd community_oracle(const Graph& g) {
  const int n = g.n_nodes();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges()) A(e.u, e.v) = A(e.v, e.u) = e.weight;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::vector<int> common;
      for (int c = 0; c < n; ++c)
        if (A(i, c) > 0 && A(j, c) > 0) common.push_back(c);
      double s = 0.0;
      for (std::size_t a = 0; a < common.size(); ++a)
        for (std::size_t b = a + 1; b < common.size(); ++b) s += A(common[a], common[b]);
      K(i, j) = s;
    }
  return K;
}

}  // namespace

TEST(KernelEval, Examples) {
  const Eigen::RowVector2d x(1, 0), y(0, 1);
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec::rbf(1.0), x, x), 1.0);
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec::cosine(), x, y), 0.0);
  const Eigen::RowVectorXd s = Eigen::RowVectorXd::LinSpaced(20, 0.0, 3.0);
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec::rbf_correlation(1.0), s, 2.0 * s.array() + 1.0), 1.0);
  EXPECT_NEAR(kernel_eval(KernelSpec::rbf_correlation(1.0), s, -s), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(kernel_eval(KernelSpec::rbf(2.0), x, y), std::exp(-2.0 / 4.0), 1e-15);
}

TEST(KernelEval, CosineZeroVectorIsZero) {
  EXPECT_EQ(kernel_eval(KernelSpec::cosine(), Eigen::RowVector2d(0, 0), Eigen::RowVector2d(1, 1)), 0.0);
}

TEST(KernelEval, Chi2) {
  const Eigen::RowVector3d a(1, 0, 2), b(0, 0, 2);
  // (1-0)^2/1 + 0 (0/0) + 0
  EXPECT_NEAR(kernel_eval(KernelSpec{KernelKind::Chi2, 1.0}, a, b), std::exp(-1.0), 1e-15);
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec{KernelKind::Chi2, 0.5}, a, a), 1.0);
}

TEST(KernelSpecCheck, RejectsBadBandwidth) {
  EXPECT_THROW(KernelSpec::rbf(0.0), ValidationError);
  EXPECT_THROW(KernelSpec::rbf(-1.0), ValidationError);
  EXPECT_THROW(kernel_kind_from_string("poly"), ValidationError);
  EXPECT_THROW(kernel_eval(KernelSpec::rbf(1), Eigen::RowVector2d(0, 0), Eigen::RowVector3d(0, 0, 0)), ValidationError);
}

TEST(CommunityKernel, Examples) {
  const Graph tri = load_edge_list("0 1\n1 2\n0 2", false);
  const KernelMatrix Kt = community_kernel(tri);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(Kt(i, j), i == j ? 1.0 : 0.0);
  const Graph k4 = load_edge_list("0 1\n0 2\n0 3\n1 2\n1 3\n2 3", false);
  EXPECT_EQ(community_kernel(k4)(0, 1), 1.0);
  EXPECT_EQ(community_kernel(Graph(5, {})).values, Eigen::MatrixXd::Zero(5, 5));
}

TEST(CommunityKernel, MatchesBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> size(2, 50);
  for (int trial = 0; trial < 40; ++trial) {
    const Graph g = testutil::random_graph(rng, size(rng), 0.25, trial % 3 == 0);
    const KernelMatrix K = community_kernel(g);
    const Eigen::MatrixXd O = community_oracle(g);
    EXPECT_LE((K.values - O).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((K.values - K.values.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(K.values.minCoeff(), 0.0);
    std::vector<int> all(static_cast<std::size_t>(g.n_nodes()));
    std::iota(all.begin(), all.end(), 0);
    EXPECT_LE((community_kernel(g, all, all).values - O).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(KernelMatrix, Examples) {
  std::mt19937_64 rng(5);
  const DataMatrix X = testutil::random_points(rng, 20, 5);
  const KernelSpec rbf = KernelSpec::rbf(2.0);
  const KernelMatrix K = kernel_matrix(rbf, X);
  EXPECT_TRUE(K.symmetric);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(K(i, i), 1.0);
  EXPECT_NEAR(K(3, 7), std::exp(-(X.row(3) - X.row(7)).squaredNorm() / 4.0), 1e-15);
  const KernelMatrix one = kernel_matrix(rbf, X.topRows(1), X.middleRows(1, 1));
  ASSERT_EQ(one.rows(), 1);
  EXPECT_EQ(one(0, 0), kernel_eval(rbf, X.row(0), X.row(1)));
  EXPECT_THROW(kernel_matrix(rbf, X, DataMatrix::Zero(3, 4)), ValidationError);
}

TEST(KernelMatrix, RangesAndSymmetry) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const DataMatrix X = testutil::random_points(rng, 15, 3, 2.0);
    const KernelMatrix R = kernel_matrix(KernelSpec::rbf(1.5), X);
    EXPECT_GT(R.values.minCoeff(), 0.0);
    EXPECT_LE(R.values.maxCoeff(), 1.0);
    const KernelMatrix C = kernel_matrix(KernelSpec::cosine(), X);
    EXPECT_GE(C.values.minCoeff(), -1.0 - 1e-15);
    EXPECT_LE(C.values.maxCoeff(), 1.0 + 1e-15);
    for (const auto* M : {&R, &C}) EXPECT_LE((M->values - M->values.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(DegreeVector, Examples) {
  KernelMatrix I{Eigen::MatrixXd::Identity(2, 2), true};
  EXPECT_EQ(degree_vector(I).values, Eigen::Vector2d(1, 1));
  KernelMatrix ones{Eigen::MatrixXd::Ones(3, 3), true};
  EXPECT_EQ(degree_vector(ones).values, Eigen::Vector3d(3, 3, 3));
  KernelMatrix z{Eigen::MatrixXd::Zero(2, 2), true};
  EXPECT_EQ(degree_vector(z).below_floor, (std::vector<int>{0, 1}));
}

TEST(DegreeVector, KarateCommunityKernelMatchesOracle) {
  const Graph g = testutil::karate();
  const Eigen::VectorXd d = degree_vector(community_kernel(g)).values;
  const Eigen::VectorXd o = community_oracle(g).rowwise().sum();
  EXPECT_LE((d - o).cwiseAbs().maxCoeff(), 1e-12);
}
