#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "speclust/data.hpp"
#include "speclust/error.hpp"
#include "speclust/kernels.hpp"
#include "speclust/ksc.hpp"
#include "speclust/metrics.hpp"
#include "speclust/model_selection.hpp"
#include "speclust/parallel.hpp"
#include "speclust/sksc.hpp"

namespace speclust {

/// |N(A) \ A| / |A| for a proper nonempty node subset A.
inline double expansion_factor(const Graph& g, const std::vector<int>& subset) {
  const int n = g.n_nodes();
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  int size = 0;
  for (int v : subset) {
    if (v < 0 || v >= n) throw ValidationError("expansion_factor: node out of range");
    if (!in[static_cast<std::size_t>(v)]) ++size;
    in[static_cast<std::size_t>(v)] = 1;
  }
  if (size == 0 || size == n) throw ValidationError("expansion_factor: subset must be nonempty and proper");
  std::vector<char> boundary(static_cast<std::size_t>(n), 0);
  int count = 0;
  for (int v = 0; v < n; ++v) {
    if (!in[static_cast<std::size_t>(v)]) continue;
    for (auto [b, e] = g.neighbors(v); b != e; ++b)
      if (!in[static_cast<std::size_t>(*b)] && !boundary[static_cast<std::size_t>(*b)]) {
        boundary[static_cast<std::size_t>(*b)] = 1;
        ++count;
      }
  }
  return static_cast<double>(count) / size;
}

struct EfConfig {
  int size = 0;             // N_A
  int stall_budget = 2000;  // consecutive rejected swaps before stopping
  std::uint64_t seed = 0;

  void validate(int n_nodes) const {
    if (size < 1 || size >= n_nodes) throw ValidationError("EfConfig: need 1 <= N_A < n_nodes");
    if (stall_budget < 1) throw ValidationError("EfConfig: stall budget must be >= 1");
  }
};

namespace detail {

/// Boundary bookkeeping for swap search: in_count[v] is the number of
/// neighbors of v inside the subset.
struct EfState {
  const Graph& g;
  std::vector<char> in;
  std::vector<int> in_count;
  int boundary = 0;
  int size = 0;

  EfState(const Graph& graph, const std::vector<int>& subset)
      : g(graph), in(static_cast<std::size_t>(graph.n_nodes()), 0), in_count(static_cast<std::size_t>(graph.n_nodes()), 0) {
    for (int v : subset) add(v);
  }

  bool outside_boundary(int v) const { return !in[static_cast<std::size_t>(v)] && in_count[static_cast<std::size_t>(v)] > 0; }

  void add(int v) {
    if (outside_boundary(v)) --boundary;
    in[static_cast<std::size_t>(v)] = 1;
    ++size;
    for (auto [b, e] = g.neighbors(v); b != e; ++b) {
      const bool was = outside_boundary(*b);
      ++in_count[static_cast<std::size_t>(*b)];
      if (!was && outside_boundary(*b)) ++boundary;
    }
  }

  void remove(int v) {
    in[static_cast<std::size_t>(v)] = 0;
    --size;
    for (auto [b, e] = g.neighbors(v); b != e; ++b) {
      const bool was = outside_boundary(*b);
      --in_count[static_cast<std::size_t>(*b)];
      if (was && !outside_boundary(*b)) --boundary;
    }
    if (outside_boundary(v)) ++boundary;
  }

  double ef() const { return static_cast<double>(boundary) / size; }
};

}  // namespace detail

/// Random-swap search for a subset with large expansion factor. A swap is
/// kept only when it strictly improves EF; the search stops after
/// stall_budget consecutive rejections. Returned ids are sorted.
inline std::vector<int> ef_subset(const Graph& g, const EfConfig& cfg) {
  const int n = g.n_nodes();
  cfg.validate(n);
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> inside(order.begin(), order.begin() + cfg.size);
  std::vector<int> outside(order.begin() + cfg.size, order.end());
  detail::EfState st(g, inside);
  double best = st.ef();
  std::uniform_int_distribution<std::size_t> pick_in(0, inside.size() - 1), pick_out(0, outside.size() - 1);
  for (int stall = 0; stall < cfg.stall_budget;) {
    const std::size_t a = pick_in(rng), b = pick_out(rng);
    const int u = inside[a], v = outside[b];
    st.remove(u);
    st.add(v);
    const double ef = st.ef();
    if (ef > best) {
      best = ef;
      inside[a] = v;
      outside[b] = u;
      stall = 0;
    } else {
      st.remove(v);
      st.add(u);
      ++stall;
    }
  }
  std::sort(inside.begin(), inside.end());
  return inside;
}

/// Seeded uniform subset of the same size, the baseline for EF selection.
inline std::vector<int> random_subset(int n, int size, std::uint64_t seed) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> out(order.begin(), order.begin() + size);
  std::sort(out.begin(), out.end());
  return out;
}

enum class SubsetMethod { Ef, Random };

struct CommunityOptions {
  std::optional<KernelSpec> kernel;       // default picked from the graph
  std::optional<double> train_fraction;   // default 0.7 below 200 nodes, else 0.15
  std::optional<double> validation_fraction;  // default: every node below 200 nodes, else 0.35
  SubsetMethod subset = SubsetMethod::Ef;
  int block_size = 256;
  int stall_budget = 2000;
  std::uint64_t seed = 0;
  std::optional<Partition> truth;
};

struct CommunityResult {
  Partition labels;  // over all nodes
  int k = 0;
  KernelSpec kernel;
  double param = 0.0;
  SelectionResult selection;
  std::vector<int> train_nodes;  // after pruning, graph indices
  double modularity = 0.0;
  double conductance = 0.0;
  std::optional<double> ari;
  std::optional<double> nmi;
  std::vector<std::string> warnings;
  double seconds = 0.0;

  /// Result document; timings are left out so reruns compare byte for byte.
  nlohmann::ordered_json to_json(const Graph& g) const {
    nlohmann::ordered_json j;
    j["k"] = k;
    j["kernel"] = to_string(kernel.kind);
    if (kernel.has_bandwidth()) j["sigma"] = kernel.sigma;
    j["n_nodes"] = g.n_nodes();
    j["n_train"] = train_nodes.size();
    j["metrics"] = {{"modularity", modularity}, {"conductance", conductance}};
    if (ari) j["metrics"]["ari"] = *ari;
    if (nmi) j["metrics"]["nmi"] = *nmi;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : selection.cells) {
      nlohmann::ordered_json cell{{"k", c.k}, {"param", c.param}};
      if (c.ok())
        cell["score"] = c.score;
      else
        cell["failure"] = c.failure;
      cells.push_back(cell);
    }
    j["selection"] = cells;
    j["warnings"] = warnings;
    nlohmann::ordered_json labels_json = nlohmann::ordered_json::object();
    for (int i = 0; i < g.n_nodes(); ++i) labels_json[g.node_ids()[static_cast<std::size_t>(i)]] = labels[static_cast<std::size_t>(i)];
    j["labels"] = labels_json;
    return j;
  }
};

/// Community kernel for unweighted graphs, RBF on adjacency rows for
/// weighted ones, cosine on adjacency rows above 2000 nodes.
inline KernelSpec default_graph_kernel(const Graph& g) {
  if (g.n_nodes() > 2000) return KernelSpec::cosine();
  if (g.weighted()) return KernelSpec::rbf(1.0);
  return KernelSpec::community();
}

/// Kernel between graph nodes. Entries are computed pair by pair, so any
/// block of rows reproduces the corresponding rows of the full matrix.
inline KernelMatrix graph_kernel(const Graph& g, const KernelSpec& spec, const std::vector<int>& rows,
                                 const std::vector<int>& cols) {
  if (spec.kind == KernelKind::Community) return community_kernel(g, rows, cols);
  const DataMatrix xr = adjacency_rows(g, rows);
  const DataMatrix xc = adjacency_rows(g, cols);
  KernelMatrix K{Eigen::MatrixXd(xr.rows(), xc.rows()), rows == cols};
  parallel_for(xr.rows(), [&](long i) {
    const Eigen::RowVectorXd x = xr.row(i);
    for (Eigen::Index j = 0; j < xc.rows(); ++j) {
      const Eigen::RowVectorXd y = xc.row(j);
      K.values(i, j) = kernel_eval(spec, x, y);
    }
  });
  return K;
}

namespace detail {

/// Largest connected component of the graph K_ij > 0 among rows with
/// positive degree; positions refer to rows of K.
inline std::vector<int> kernel_giant_component(const KernelMatrix& K) {
  const Eigen::Index n = K.rows();
  const Eigen::VectorXd d = K.values.rowwise().sum();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  std::vector<int> best;
  int c = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0 || !(d(s) > degree_floor)) continue;
    std::vector<int> members{static_cast<int>(s)};
    comp[static_cast<std::size_t>(s)] = c;
    for (std::size_t h = 0; h < members.size(); ++h)
      for (Eigen::Index t = 0; t < n; ++t)
        if (comp[static_cast<std::size_t>(t)] < 0 && d(t) > degree_floor && (K.values(members[h], t) > 0.0 || K.values(t, members[h]) > 0.0)) {
          comp[static_cast<std::size_t>(t)] = c;
          members.push_back(static_cast<int>(t));
        }
    if (members.size() > best.size()) best = members;
    ++c;
  }
  std::sort(best.begin(), best.end());
  return best;
}

inline KernelMatrix sub_kernel(const KernelMatrix& K, const std::vector<int>& keep) {
  KernelMatrix out{Eigen::MatrixXd(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(keep.size())), K.symmetric};
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = 0; b < keep.size(); ++b)
      out.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = K.values(keep[a], keep[b]);
  return out;
}

/// Scores row by row in a fixed summation order.
inline ScoreMatrix scores_rowwise(const KscModel& m, const KernelMatrix& K_test) {
  if (K_test.cols() != m.alphas.rows()) throw ValidationError("project: kernel columns do not match N_Tr");
  ScoreMatrix e(K_test.rows(), m.alphas.cols());
  for (Eigen::Index i = 0; i < K_test.rows(); ++i)
    for (Eigen::Index l = 0; l < m.alphas.cols(); ++l) {
      double s = m.biases(l);
      for (Eigen::Index j = 0; j < m.alphas.rows(); ++j) s += K_test.values(i, j) * m.alphas(j, l);
      e(i, l) = s;
    }
  return e;
}

}  // namespace detail

struct GraphProjection {
  ScoreMatrix scores;
  std::vector<char> zero_row;  // test kernel row sums to 0
};

/// Out-of-sample scores for `nodes`, computed in independent blocks.
inline GraphProjection project_nodes(const Graph& g, const KscModel& m, const std::vector<int>& train_nodes,
                                     const std::vector<int>& nodes, int block_size) {
  if (block_size < 1) throw ValidationError("project_nodes: block size must be >= 1");
  const long n = static_cast<long>(nodes.size());
  const long blocks = (n + block_size - 1) / block_size;
  GraphProjection out{ScoreMatrix(n, m.alphas.cols()), std::vector<char>(static_cast<std::size_t>(n), 0)};
  const auto run_block = [&](long b) {
    const long lo = b * block_size, hi = std::min(n, lo + block_size);
    const std::vector<int> rows(nodes.begin() + lo, nodes.begin() + hi);
    KernelMatrix K = graph_kernel(g, m.kernel, rows, train_nodes);
    K.symmetric = false;
    const ScoreMatrix e = detail::scores_rowwise(m, K);
    for (long i = lo; i < hi; ++i) {
      out.scores.row(i) = e.row(i - lo);
      out.zero_row[static_cast<std::size_t>(i)] = K.values.row(i - lo).sum() <= degree_floor;
    }
  };
  for (long b = 0; b < blocks; ++b) run_block(b);
  return out;
}

/// Labels for unassigned nodes (-1) by repeated majority vote of already
/// labeled graph neighbors; ties go to the smaller label. Nodes with no
/// labeled path get the largest cluster.
inline int fill_by_neighbors(const Graph& g, std::vector<int>& labels, int k) {
  int filled = 0;
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<int> next = labels;
    for (int v = 0; v < g.n_nodes(); ++v) {
      if (labels[static_cast<std::size_t>(v)] >= 0) continue;
      std::vector<double> votes(static_cast<std::size_t>(k), 0.0);
      bool any = false;
      const double* w = g.neighbor_weights(v);
      int idx = 0;
      for (auto [b, e] = g.neighbors(v); b != e; ++b, ++idx) {
        const int l = labels[static_cast<std::size_t>(*b)];
        if (l < 0) continue;
        votes[static_cast<std::size_t>(l)] += w[idx];
        any = true;
      }
      if (!any) continue;
      next[static_cast<std::size_t>(v)] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
      changed = true;
      ++filled;
    }
    labels = std::move(next);
  }
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels)
    if (l >= 0) ++counts[static_cast<std::size_t>(l)];
  const int largest = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  for (auto& l : labels)
    if (l < 0) {
      l = largest;
      ++filled;
    }
  return filled;
}

namespace detail {

struct TrainedGraphModel {
  KscFit fit;
  std::vector<int> train_nodes;
};

/// Trains on the kernel's giant component within the candidate nodes.
inline TrainedGraphModel train_graph_model(const Graph& g, const KernelSpec& spec, const std::vector<int>& candidates, int k,
                                           std::vector<std::string>* warnings) {
  const KernelMatrix K = graph_kernel(g, spec, candidates, candidates);
  const std::vector<int> keep = kernel_giant_component(K);
  if (static_cast<int>(keep.size()) < k)
    throw NumericalError("detect_communities: kernel giant component has " + std::to_string(keep.size()) + " nodes, need k = " + std::to_string(k));
  if (warnings && keep.size() < candidates.size())
    warnings->push_back("training restricted to the kernel's giant component: " + std::to_string(keep.size()) + " of " +
                        std::to_string(candidates.size()) + " nodes");
  TrainedGraphModel out;
  for (int p : keep) out.train_nodes.push_back(candidates[static_cast<std::size_t>(p)]);
  out.fit = train_ksc(sub_kernel(K, keep), k);
  out.fit.model.kernel = spec;
  out.fit.model.source.kind = "graph";
  for (int v : out.train_nodes) out.fit.model.source.ids.push_back(g.node_ids()[static_cast<std::size_t>(v)]);
  return out;
}

inline Partition decode_nodes(const Graph& g, const GraphProjection& proj, const Codebook& codebook, const std::vector<int>& nodes,
                              bool fill, int* filled) {
  const Partition raw = assign_hamming(proj.scores, codebook);
  if (!fill) return raw;
  std::vector<int> labels(static_cast<std::size_t>(g.n_nodes()), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!proj.zero_row[i]) labels[static_cast<std::size_t>(nodes[i])] = raw[i];
  const int n_fill = fill_by_neighbors(g, labels, raw.k());
  if (filled) *filled = n_fill;
  std::vector<int> out;
  for (int v : nodes) out.push_back(labels[static_cast<std::size_t>(v)]);
  return Partition(std::move(out), raw.k());
}

}  // namespace detail

/// EF (or random) subset training, grid model selection on validation nodes,
/// then blockwise out-of-sample labeling of every node.
inline CommunityResult detect_communities(const Graph& g, const GridSpec& grid, const CommunityOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  grid.validate();
  const int n = g.n_nodes();
  if (n < 3) throw ValidationError("detect_communities: graph too small");
  if (g.n_edges() == 0) throw ValidationError("detect_communities: graph has no edges");
  if (opt.truth && static_cast<int>(opt.truth->size()) != n) throw ValidationError("detect_communities: truth size mismatch");
  const KernelSpec base = opt.kernel.value_or(default_graph_kernel(g));
  const bool small = n < 200;
  const double tf = opt.train_fraction.value_or(small ? 0.7 : 0.15);
  if (!(tf > 0.0 && tf < 1.0)) throw ValidationError("detect_communities: train fraction must lie in (0,1)");
  const int n_train = std::clamp(static_cast<int>(std::lround(tf * n)), 2, n - 1);

  CommunityResult r;
  const std::vector<int> candidates = opt.subset == SubsetMethod::Ef ? ef_subset(g, {n_train, opt.stall_budget, opt.seed})
                                                                     : random_subset(n, n_train, opt.seed);
  std::vector<int> validation;
  if (opt.validation_fraction || !small) {
    const double vf = opt.validation_fraction.value_or(0.35);
    std::vector<int> rest;
    std::vector<char> in(static_cast<std::size_t>(n), 0);
    for (int v : candidates) in[static_cast<std::size_t>(v)] = 1;
    for (int v = 0; v < n; ++v)
      if (!in[static_cast<std::size_t>(v)]) rest.push_back(v);
    std::mt19937_64 rng(opt.seed + 1);
    std::shuffle(rest.begin(), rest.end(), rng);
    rest.resize(std::min(rest.size(), static_cast<std::size_t>(std::lround(vf * n))));
    std::sort(rest.begin(), rest.end());
    validation = rest;
  }
  if (validation.empty()) {
    validation.resize(static_cast<std::size_t>(n));
    std::iota(validation.begin(), validation.end(), 0);
  }
  Graph val_graph = g.induced(validation);
  if (grid.criterion == Criterion::Mod && val_graph.n_edges() == 0) {
    r.warnings.push_back("validation subgraph has no edges; modularity evaluated on the full graph");
    validation.resize(static_cast<std::size_t>(n));
    std::iota(validation.begin(), validation.end(), 0);
    val_graph = g;
  }

  r.selection = select(grid, [&](int k, double param) {
    KernelSpec spec = base;
    if (spec.has_bandwidth()) spec.sigma = param;
    const auto tm = detail::train_graph_model(g, spec, candidates, k, nullptr);
    const GraphProjection proj = project_nodes(g, tm.fit.model, tm.train_nodes, validation, opt.block_size);
    switch (grid.criterion) {
      case Criterion::Mod: {
        const Partition p = detail::decode_nodes(val_graph, proj, tm.fit.model.codebook, std::vector<int>(), false, nullptr);
        return modularity(val_graph, p);
      }
      case Criterion::Blf:
        return blf(proj.scores, assign_hamming(proj.scores, tm.fit.model.codebook), grid.eta);
      case Criterion::Ams:
        try {
          return ams(soft_assign(proj.scores, compute_prototypes(tm.fit.train_scores, tm.fit.train_labels)));
        } catch (const EmptyCluster& e) {
          throw NumericalError(e.what());
        }
    }
    return failed_score;
  });

  r.k = r.selection.best_k;
  r.param = r.selection.best_param;
  r.kernel = base;
  if (r.kernel.has_bandwidth()) r.kernel.sigma = r.param;
  const auto tm = detail::train_graph_model(g, r.kernel, candidates, r.k, &r.warnings);
  r.train_nodes = tm.train_nodes;
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  const GraphProjection proj = project_nodes(g, tm.fit.model, tm.train_nodes, all, opt.block_size);
  int filled = 0;
  r.labels = detail::decode_nodes(g, proj, tm.fit.model.codebook, all, true, &filled);
  if (filled > 0)
    r.warnings.push_back(std::to_string(filled) + " nodes had an all-zero kernel row and took their neighbors' majority label");
  r.modularity = modularity(g, r.labels);
  const ConductanceResult cond = conductance(g, r.labels);
  r.conductance = cond.mean;
  for (const auto& w : cond.warnings) r.warnings.push_back(w);
  if (opt.truth) {
    r.ari = ari(r.labels, *opt.truth);
    r.nmi = nmi(r.labels, *opt.truth);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace speclust
