#pragma once

#include <Eigen/Core>

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "speclust/data.hpp"
#include "speclust/error.hpp"
#include "speclust/kernels.hpp"
#include "speclust/ksc.hpp"
#include "speclust/sksc.hpp"

namespace speclust {

constexpr const char* library_version = "1.0.0";

using Json = nlohmann::ordered_json;

// Doubles are written in shortest round-trip form, so every field reloads to
// the same bits.

namespace detail {

inline Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Eigen::MatrixXd matrix_from_json(const Json& j, const char* what) {
  try {
    const auto r = j.at("rows").get<Eigen::Index>();
    const auto c = j.at("cols").get<Eigen::Index>();
    const auto& d = j.at("data");
    if (r < 0 || c < 0 || static_cast<Eigen::Index>(d.size()) != r * c)
      throw ValidationError(std::string("model JSON: ") + what + " has the wrong number of entries");
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index k = 0; k < c; ++k) m(i, k) = d[static_cast<std::size_t>(i * c + k)].get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model JSON: bad ") + what + ": " + e.what());
  }
}

inline Json vector_to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Eigen::VectorXd vector_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string("model JSON: ") + what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace detail

inline Json kernel_to_json(const KernelSpec& k) {
  Json j{{"kind", to_string(k.kind)}};
  if (k.has_bandwidth()) j["sigma"] = k.sigma;
  return j;
}

inline KernelSpec kernel_from_json(const Json& j) {
  KernelSpec k{kernel_kind_from_string(j.at("kind").get<std::string>()), 1.0};
  if (j.contains("sigma")) k.sigma = j.at("sigma").get<double>();
  k.validate();
  return k;
}

inline Json model_to_json(const KscModel& m) {
  Json cb = Json::array();
  for (Eigen::Index p = 0; p < m.codebook.rows(); ++p) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.codebook.cols(); ++j) row.push_back(m.codebook(p, j));
    cb.push_back(row);
  }
  Json j{{"k", m.k},
         {"kernel", kernel_to_json(m.kernel)},
         {"eigenvalues", detail::vector_to_json(m.eigenvalues)},
         {"biases", detail::vector_to_json(m.biases)},
         {"alphas", detail::matrix_to_json(m.alphas)},
         {"codebook", cb},
         {"source", {{"kind", m.source.kind}, {"path", m.source.path}, {"ids", m.source.ids}}}};
  if (m.train_points.size() > 0) j["train_points"] = detail::matrix_to_json(m.train_points);
  return j;
}

inline KscModel model_from_json(const Json& j) {
  KscModel m;
  try {
    m.k = j.at("k").get<int>();
    m.kernel = kernel_from_json(j.at("kernel"));
    m.eigenvalues = detail::vector_from_json(j.at("eigenvalues"), "eigenvalues");
    m.biases = detail::vector_from_json(j.at("biases"), "biases");
    m.alphas = detail::matrix_from_json(j.at("alphas"), "alphas");
    const auto& cb = j.at("codebook");
    m.codebook.resize(static_cast<Eigen::Index>(cb.size()), m.k - 1);
    for (std::size_t p = 0; p < cb.size(); ++p) {
      if (cb[p].size() != static_cast<std::size_t>(m.k - 1)) throw ValidationError("model JSON: codebook row has the wrong length");
      for (std::size_t l = 0; l < cb[p].size(); ++l) m.codebook(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(l)) = cb[p][l].get<int>();
    }
    const auto& s = j.at("source");
    m.source.kind = s.at("kind").get<std::string>();
    m.source.path = s.at("path").get<std::string>();
    m.source.ids = s.at("ids").get<std::vector<std::string>>();
    if (j.contains("train_points")) m.train_points = detail::matrix_from_json(j.at("train_points"), "train_points");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model JSON: ") + e.what());
  }
  if (m.k < 2 || m.alphas.cols() != m.k - 1 || m.biases.size() != m.k - 1 || m.codebook.rows() != m.k)
    throw ValidationError("model JSON: dimensions disagree with k");
  return m;
}

/// k columns headed cluster_0..cluster_{k-1}.
inline void write_memberships(std::ostream& out, const SoftPartition& soft) {
  std::vector<std::string> header;
  for (int p = 0; p < soft.k(); ++p) header.push_back("cluster_" + std::to_string(p));
  write_csv(out, soft.memberships, header);
}

/// Score or alpha coordinates per row, headed e_1..e_{k-1} (or a custom prefix).
inline void write_coordinates(std::ostream& out, const Eigen::MatrixXd& m, const std::string& prefix = "e_",
                              const std::vector<std::string>& ids = {}) {
  if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != m.rows()) throw ValidationError("write_coordinates: ids do not match rows");
  if (!ids.empty()) out << "id,";
  for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << prefix << j + 1;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (!ids.empty()) out << ids[static_cast<std::size_t>(i)] << ',';
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << detail::format_double(m(i, j));
    out << '\n';
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path + "': " + e.what());
  }
}

/// Resolved configuration plus versions; enough to rerun a command.
inline Json make_manifest(const std::string& command, const Json& config, std::uint64_t seed) {
  return {{"command", command},
          {"seed", seed},
          {"config", config},
          {"versions",
           {{"speclust", library_version},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
}

}  // namespace speclust
