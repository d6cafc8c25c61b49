#pragma once

#include <fstream>
#include <random>
#include <string>

#include "speclust.hpp"

namespace testutil {

inline std::string data_path(const std::string& name) { return std::string(SPECLUST_DATA_DIR) + "/" + name; }

inline speclust::Graph karate() {
  std::ifstream in(data_path("karate.edges"));
  return speclust::load_edge_list(in, false);
}

inline speclust::Partition karate_truth() {
  std::ifstream in(data_path("karate.truth"));
  return speclust::Partition::from_labels(speclust::read_labels(in));
}

inline speclust::Graph random_graph(std::mt19937_64& rng, int n, double p, bool weighted = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<speclust::Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < p) edges.push_back({i, j, weighted ? 0.5 + u(rng) : 1.0});
  return speclust::Graph(n, std::move(edges), {}, weighted);
}

inline speclust::Partition random_partition(std::mt19937_64& rng, int n, int k) {
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<int> l(static_cast<std::size_t>(n));
  for (auto& v : l) v = pick(rng);
  return speclust::Partition(std::move(l), k);
}

inline speclust::DataMatrix random_points(std::mt19937_64& rng, int n, int d, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  speclust::DataMatrix x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

/// A few well separated blobs, handy for models that should be exact.
inline speclust::LabeledDataset blobs(std::uint64_t seed, int per = 40, int k = 3, double sd = 0.3) {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
  for (int c = 0; c < k; ++c) {
    means.push_back(Eigen::Vector2d(6.0 * std::cos(2 * M_PI * c / k), 6.0 * std::sin(2 * M_PI * c / k)));
    covs.push_back(Eigen::Matrix2d::Identity() * sd * sd);
  }
  return speclust::gen_gaussian_mixture(means, covs, std::vector<int>(static_cast<std::size_t>(k), per), seed);
}

}  // namespace testutil
