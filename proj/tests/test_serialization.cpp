#include <gtest/gtest.h>

#include <cstring>

#include "speclust.hpp"
#include "test_util.hpp"

using namespace speclust;

namespace {

bool same_bits(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

KscModel point_model() {
  const auto d = testutil::blobs(3, 30, 3, 0.4);
  return train_ksc(KernelSpec::rbf(1.3), d.data, 3).model;
}

}  // namespace

TEST(ModelJson, RoundTripIsBitStable) {
  const KscModel m = point_model();
  const Json j = model_to_json(m);
  const KscModel back = model_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.k, m.k);
  EXPECT_EQ(back.kernel.kind, m.kernel.kind);
  EXPECT_EQ(back.kernel.sigma, m.kernel.sigma);
  EXPECT_TRUE(same_bits(back.alphas, m.alphas));
  EXPECT_TRUE(same_bits(back.biases, m.biases));
  EXPECT_TRUE(same_bits(back.eigenvalues, m.eigenvalues));
  EXPECT_TRUE(same_bits(back.train_points, m.train_points));
  EXPECT_EQ(back.codebook, m.codebook);
  // A second pass writes the same text.
  EXPECT_EQ(model_to_json(back).dump(), j.dump());
}

TEST(ModelJson, ReloadedModelPredictsTheSame) {
  const auto d = testutil::blobs(4, 30, 3, 0.4);
  const KscModel m = train_ksc(KernelSpec::rbf(1.0), d.data, 3).model;
  const KscModel back = model_from_json(Json::parse(model_to_json(m).dump()));
  const auto test = testutil::blobs(5, 20, 3, 0.4);
  const KernelMatrix Kt = kernel_matrix(m.kernel, test.data, m.train_points);
  EXPECT_EQ(assign_hamming(project(m, Kt), m.codebook), assign_hamming(project(back, Kt), back.codebook));
}

TEST(ModelJson, GraphModelKeepsIds) {
  const Graph g = planted_partition(60, 2, 0.5, 0.05, 0).graph;
  const KscModel m = train_ksc(community_kernel(g), 2).model;
  KscModel tagged = m;
  tagged.source.kind = "graph";
  tagged.source.ids = g.node_ids();
  const KscModel back = model_from_json(model_to_json(tagged));
  EXPECT_EQ(back.source.ids, g.node_ids());
  EXPECT_EQ(back.train_points.size(), 0);
}

TEST(ModelJson, RejectsInconsistentDimensions) {
  const Json good = model_to_json(point_model());
  Json j = good;
  j["k"] = 4;
  EXPECT_THROW(model_from_json(j), ValidationError);
  j = good;
  j["alphas"]["rows"] = 7;
  EXPECT_THROW(model_from_json(j), ValidationError);
  j = good;
  j["biases"].push_back(0.5);
  EXPECT_THROW(model_from_json(j), ValidationError);
  j = good;
  j["codebook"][0].push_back(1);
  EXPECT_THROW(model_from_json(j), ValidationError);
  j = good;
  j.erase("eigenvalues");
  EXPECT_THROW(model_from_json(j), ValidationError);
  j = good;
  j["kernel"]["sigma"] = -1.0;
  EXPECT_THROW(model_from_json(j), ValidationError);
}

TEST(Manifest, CarriesCommandSeedConfigAndVersions) {
  const Json m = make_manifest("cluster", {{"grid-k", "2:6"}}, 42);
  EXPECT_EQ(m.at("command"), "cluster");
  EXPECT_EQ(m.at("seed"), 42);
  EXPECT_EQ(m.at("config").at("grid-k"), "2:6");
  EXPECT_EQ(m.at("versions").at("speclust"), library_version);
  EXPECT_TRUE(m.at("versions").contains("eigen"));
}

TEST(CoordinatesCsv, HeaderAndIds) {
  Eigen::MatrixXd m(2, 2);
  m << 0.1, -2, 3, 1e-300;
  std::ostringstream out;
  write_coordinates(out, m, "e_", {"a", "b"});
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "id,e_1,e_2");
  EXPECT_EQ(row.substr(0, 2), "a,");
  EXPECT_THROW(write_coordinates(out, m, "e_", {"a"}), ValidationError);
}
