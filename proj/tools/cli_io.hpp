#pragma once

// File plumbing shared by the CLI subcommands.

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "speclust.hpp"

namespace cli {

using speclust::Json;
using speclust::ValidationError;

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return in;
}

inline void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  body(out);
  if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  write_file(path, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

inline std::filesystem::path prepare_out(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

/// "2:6" is an inclusive range, "2,4,8" a list.
inline std::vector<int> parse_int_grid(const std::string& s) {
  std::vector<int> out;
  const auto colon = s.find(':');
  try {
    if (colon != std::string::npos) {
      const int a = std::stoi(s.substr(0, colon)), b = std::stoi(s.substr(colon + 1));
      if (a > b) throw ValidationError("bad range '" + s + "'");
      for (int k = a; k <= b; ++k) out.push_back(k);
    } else {
      std::stringstream ss(s);
      for (std::string f; std::getline(ss, f, ',');) out.push_back(std::stoi(f));
    }
  } catch (const std::logic_error&) {
    throw ValidationError("bad integer grid '" + s + "'");
  }
  if (out.empty()) throw ValidationError("empty grid '" + s + "'");
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string f; std::getline(ss, f, ',');) {
    auto v = speclust::detail::parse_double(speclust::detail::trim(f));
    if (!v || !std::isfinite(*v)) throw ValidationError("bad number '" + f + "' in '" + s + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw ValidationError("empty list '" + s + "'");
  return out;
}

inline speclust::DataMatrix read_matrix(const std::string& path) {
  auto in = open_in(path);
  return speclust::read_csv(in);
}

inline speclust::Partition read_partition(const std::string& path) {
  auto in = open_in(path);
  auto labels = speclust::read_labels(in);
  if (labels.empty()) throw ValidationError("'" + path + "' holds no labels");
  return speclust::Partition::from_labels(std::move(labels));
}

inline std::vector<std::string> read_lines(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    line = speclust::detail::trim(line);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

/// Edge list, optionally with an explicit node order (one id per line) that
/// may include isolated nodes.
inline speclust::Graph read_graph(const std::string& path, bool weighted, const std::string& nodes_path = {}) {
  auto in = open_in(path);
  speclust::Graph g = speclust::load_edge_list(in, weighted);
  if (nodes_path.empty()) return g;
  const std::vector<std::string> ids = read_lines(nodes_path);
  std::unordered_map<std::string, int> pos;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!pos.emplace(ids[i], static_cast<int>(i)).second) throw ValidationError("duplicate node id '" + ids[i] + "' in '" + nodes_path + "'");
  std::vector<speclust::Edge> edges;
  for (const auto& e : g.edges()) {
    const auto a = pos.find(g.node_ids()[static_cast<std::size_t>(e.u)]);
    const auto b = pos.find(g.node_ids()[static_cast<std::size_t>(e.v)]);
    if (a == pos.end() || b == pos.end()) throw ValidationError("edge endpoint missing from '" + nodes_path + "'");
    edges.push_back({a->second, b->second, e.weight});
  }
  return speclust::Graph(static_cast<int>(ids.size()), std::move(edges), ids, weighted);
}

inline void write_graph(const std::filesystem::path& edges, const std::filesystem::path& nodes, const speclust::Graph& g) {
  write_file(edges, [&](std::ostream& o) { speclust::write_edge_list(o, g); });
  write_file(nodes, [&](std::ostream& o) {
    for (const auto& id : g.node_ids()) o << id << '\n';
  });
}

inline void write_partition(const std::filesystem::path& path, const speclust::Partition& p) {
  write_file(path, [&](std::ostream& o) { speclust::write_labels(o, p); });
}

}  // namespace cli
