#pragma once

#include <Eigen/Dense>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "speclust/data.hpp"
#include "speclust/error.hpp"
#include "speclust/kernels.hpp"
#include "speclust/ksc.hpp"
#include "speclust/metrics.hpp"
#include "speclust/model_selection.hpp"

namespace speclust {

constexpr double singular_condition = 1e12;

struct MkscHistoryEntry {
  std::vector<std::string> ids;
  Eigen::MatrixXd alpha;  // unit-norm columns, one row per id
};

struct MkscState {
  int memory = 1;
  double gamma = 1.0;
  double nu = 1.0;
  int k = 2;
  std::deque<MkscHistoryEntry> history;  // front = t-1
  Codebook codebook;

  void validate() const {
    if (memory < 1) throw ValidationError("MkscState: memory must be >= 1");
    if (!(gamma > 0.0)) throw ValidationError("MkscState: gamma must be > 0");
    if (nu < 0.0) throw ValidationError("MkscState: nu must be >= 0");
    if (k < 2) throw ValidationError("MkscState: k must be >= 2");
  }

  void push(MkscHistoryEntry e) {
    history.push_front(std::move(e));
    while (static_cast<int>(history.size()) > memory) history.pop_back();
  }
};

/// History entry r re-indexed to the current ids: rows of new nodes are zero,
/// nodes gone at t are dropped.
inline Eigen::MatrixXd align_alpha(const MkscHistoryEntry& h, const std::vector<std::string>& current) {
  std::unordered_map<std::string, Eigen::Index> pos;
  for (std::size_t i = 0; i < h.ids.size(); ++i) pos.emplace(h.ids[i], static_cast<Eigen::Index>(i));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(current.size()), h.alpha.cols());
  for (std::size_t i = 0; i < current.size(); ++i)
    if (auto it = pos.find(current[i]); it != pos.end()) out.row(static_cast<Eigen::Index>(i)) = h.alpha.row(it->second);
  return out;
}

inline std::vector<Eigen::MatrixXd> align_snapshots(const MkscState& state, const std::vector<std::string>& current) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& h : state.history) out.push_back(align_alpha(h, current));
  return out;
}

struct MkscStep {
  Eigen::MatrixXd alpha;  // unit-norm columns
  Eigen::VectorXd biases;
  ScoreMatrix scores;
  Partition labels;
  double residual = 0.0;  // max over columns of |A x - rhs| / |rhs|
  bool memoryless = false;
};

namespace detail {

/// Codebook from the k most frequent sign patterns of the scores.
inline Codebook score_codebook(const ScoreMatrix& e, int k) { return frequent_sign_patterns(e, k); }

}  // namespace detail

/// One MKSC step. `cross[r]` is the kernel between the current nodes and the
/// nodes of snapshot t-1-r, both indexed by the current ids (zero rows and
/// columns for nodes missing on either side); `alpha_prev[r]` is aligned the
/// same way. With nu = 0 the step is a plain KSC fit.
inline MkscStep mksc_step(MkscState& state, const KernelMatrix& omega, const std::vector<KernelMatrix>& cross,
                          const std::vector<Eigen::MatrixXd>& alpha_prev, const std::vector<std::string>& ids) {
  state.validate();
  const Eigen::Index n = omega.rows();
  if (omega.cols() != n) throw ValidationError("mksc_step: kernel must be square");
  if (static_cast<Eigen::Index>(ids.size()) != n) throw ValidationError("mksc_step: ids do not match the kernel");
  if (cross.size() != alpha_prev.size()) throw ValidationError("mksc_step: cross kernels and history disagree");
  for (std::size_t r = 0; r < cross.size(); ++r)
    if (cross[r].rows() != n || cross[r].cols() != n || alpha_prev[r].rows() != n || alpha_prev[r].cols() != state.k - 1)
      throw ValidationError("mksc_step: history matrix " + std::to_string(r) + " does not conform");
  MkscStep out;

  Eigen::MatrixXd memory_term = Eigen::MatrixXd::Zero(n, state.k - 1);
  for (std::size_t r = 0; r < cross.size(); ++r) memory_term += cross[r].values * alpha_prev[r];

  // No usable memory (first step, nu = 0, or no shared nodes): plain KSC.
  if (cross.empty() || state.nu == 0.0 || memory_term.isZero(0.0)) {
    const KscFit fit = train_ksc(omega, state.k);
    out.alpha = fit.model.alphas;
    out.biases = fit.model.biases;
    out.scores = fit.train_scores;
    out.labels = fit.train_labels;
    out.memoryless = true;
    state.codebook = fit.model.codebook;
    state.push({ids, out.alpha});
    return out;
  }

  Eigen::VectorXd d = omega.values.rowwise().sum();
  for (const auto& c : cross) d += c.values.rowwise().sum();
  std::vector<int> low;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(d(i) > degree_floor)) low.push_back(static_cast<int>(i));
  if (!low.empty()) throw ZeroDegreeRow(low);
  const Eigen::VectorXd dinv = d.cwiseInverse();
  const double c = dinv.sum();
  // D^-1 M_D applied to a matrix Y: D^-1 (Y - 1 (dinv' Y) / c)
  const auto dm = [&](const Eigen::MatrixXd& y) -> Eigen::MatrixXd {
    Eigen::MatrixXd z = y;
    z.rowwise() -= (dinv.transpose() * y) / c;
    return dinv.asDiagonal() * z;
  };

  const Eigen::MatrixXd A = dm(omega.values) - Eigen::MatrixXd::Identity(n, n) / state.gamma;
  const Eigen::MatrixXd rhs = -state.nu * dm(memory_term);

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const double rcond = lu.rcond();
  if (!(rcond > 1.0 / singular_condition)) throw SingularSystem(0, rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
  Eigen::MatrixXd x = lu.solve(rhs);
  for (Eigen::Index l = 0; l < x.cols(); ++l) {
    const double rn = rhs.col(l).norm();
    const double res = (A * x.col(l) - rhs.col(l)).norm();
    out.residual = std::max(out.residual, rn > 0.0 ? res / rn : res);
    if (!x.col(l).allFinite() || x.col(l).norm() == 0.0) throw SingularSystem(static_cast<int>(l), 1.0 / rcond);
  }

  // Bias and scores use the raw solution so the memory term keeps its weight.
  const Eigen::MatrixXd raw = omega.values * x + state.nu * memory_term;
  out.biases = -(dinv.transpose() * raw).transpose() / c;
  out.scores = raw;
  out.scores.rowwise() += out.biases.transpose();
  out.alpha = x;
  for (Eigen::Index l = 0; l < x.cols(); ++l) {
    out.alpha.col(l).normalize();
    detail::normalize_sign(out.alpha.col(l));
  }
  state.codebook = detail::score_codebook(out.scores, state.k);
  out.labels = assign_hamming(out.scores, state.codebook);
  state.push({ids, out.alpha});
  return out;
}

/// Kernel between the current snapshot and a previous one, indexed by the
/// current ids on both sides. `prev_rows` maps each current id to its row in
/// the previous feature matrix (-1 when absent).
inline KernelMatrix cross_kernel(const KernelSpec& spec, const DataMatrix& current, const DataMatrix& previous,
                                 const std::vector<int>& prev_rows) {
  const Eigen::Index n = current.rows();
  KernelMatrix K{Eigen::MatrixXd::Zero(n, n), false};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const int pj = prev_rows[static_cast<std::size_t>(j)];
      if (pj >= 0) K.values(i, j) = kernel_eval(spec, current.row(i), previous.row(pj));
    }
  return K;
}

/// Community kernel across snapshots: entry (i, j) is the weight of current
/// edges inside N_t(i) intersected with N_prev(j). Nodes are matched by id.
inline KernelMatrix cross_community_kernel(const Graph& current, const Graph& previous) {
  const int n = current.n_nodes();
  KernelMatrix K{Eigen::MatrixXd::Zero(n, n), false};
  std::vector<int> to_current(static_cast<std::size_t>(previous.n_nodes()), -1);
  for (int v = 0; v < previous.n_nodes(); ++v)
    if (auto c = current.index_of(previous.node_ids()[static_cast<std::size_t>(v)])) to_current[static_cast<std::size_t>(v)] = *c;
  for (int j = 0; j < n; ++j) {
    const auto pj = previous.index_of(current.node_ids()[static_cast<std::size_t>(j)]);
    if (!pj) continue;
    std::vector<int> nj;
    for (auto [b, e] = previous.neighbors(*pj); b != e; ++b)
      if (to_current[static_cast<std::size_t>(*b)] >= 0) nj.push_back(to_current[static_cast<std::size_t>(*b)]);
    std::sort(nj.begin(), nj.end());
    for (int i = 0; i < n; ++i) {
      auto [ib, ie] = current.neighbors(i);
      std::vector<int> common;
      std::set_intersection(ib, ie, nj.begin(), nj.end(), std::back_inserter(common));
      K.values(i, j) = detail::edges_within(current, common);
    }
  }
  return K;
}

enum class QualityKind { Mod, Cond, Ari, Blf };

inline QualityKind quality_from_string(const std::string& s) {
  if (s == "mod") return QualityKind::Mod;
  if (s == "cond") return QualityKind::Cond;
  if (s == "ari") return QualityKind::Ari;
  if (s == "blf") return QualityKind::Blf;
  throw ValidationError("unknown quality measure '" + s + "'");
}

/// Snapshot t as seen by a smoothed measure: graph or scores plus truth.
struct QualityView {
  std::vector<std::string> ids;
  const Graph* graph = nullptr;
  const Partition* truth = nullptr;
  const ScoreMatrix* scores = nullptr;
};

namespace detail {

inline std::vector<int> positions_of(const std::vector<std::string>& ids, const std::vector<std::string>& wanted) {
  std::unordered_map<std::string, int> pos;
  for (std::size_t i = 0; i < ids.size(); ++i) pos.emplace(ids[i], static_cast<int>(i));
  std::vector<int> out;
  for (const auto& w : wanted)
    if (auto it = pos.find(w); it != pos.end()) out.push_back(it->second);
    else out.push_back(-1);
  return out;
}

inline double snapshot_quality(QualityKind kind, const Partition& part, const QualityView& v, double eta) {
  switch (kind) {
    case QualityKind::Mod:
      if (!v.graph) throw ValidationError("smoothed_quality: modularity needs a graph");
      return modularity(*v.graph, part);
    case QualityKind::Cond:
      if (!v.graph) throw ValidationError("smoothed_quality: conductance needs a graph");
      return conductance(*v.graph, part).mean;
    case QualityKind::Ari:
      if (!v.truth) throw ValidationError("smoothed_quality: ARI needs truth");
      return ari(part, *v.truth);
    case QualityKind::Blf:
      if (!v.scores) throw ValidationError("smoothed_quality: BLF needs scores");
      return blf(*v.scores, part, eta);
  }
  return 0.0;
}

}  // namespace detail

/// eta * CQ(P_t, G_t) + (1 - eta) * CQ(P_t, G_{t-1}). The second term uses
/// the nodes present at both steps, on G_{t-1} restricted to them.
inline double smoothed_quality(QualityKind kind, const Partition& part, const QualityView& now,
                               const std::optional<QualityView>& before, double eta, double blf_eta = 0.5) {
  if (eta < 0.0 || eta > 1.0) throw ValidationError("smoothed_quality: eta must lie in [0,1]");
  if (part.size() != now.ids.size()) throw ValidationError("smoothed_quality: labels do not cover the snapshot");
  const double q_now = detail::snapshot_quality(kind, part, now, blf_eta);
  if (!before || eta == 1.0) return q_now;

  const std::vector<int> in_prev = detail::positions_of(before->ids, now.ids);
  std::vector<int> cur_rows, prev_rows;
  for (std::size_t i = 0; i < in_prev.size(); ++i)
    if (in_prev[i] >= 0) {
      cur_rows.push_back(static_cast<int>(i));
      prev_rows.push_back(in_prev[i]);
    }
  if (cur_rows.empty()) return q_now;
  const Partition shared = part.subset(cur_rows);
  std::optional<Graph> g;
  std::optional<Partition> truth;
  std::optional<ScoreMatrix> scores;
  QualityView prev{{}, nullptr, nullptr, nullptr};
  if (before->graph) {
    g = before->graph->induced(prev_rows);
    prev.graph = &*g;
  }
  if (before->truth) {
    truth = before->truth->subset(prev_rows);
    prev.truth = &*truth;
  }
  if (before->scores) {
    scores = take_rows(*before->scores, prev_rows);
    prev.scores = &*scores;
  }
  // An edgeless restriction has no defined modularity or conductance; count it as 0.
  const bool edgeless = (kind == QualityKind::Mod || kind == QualityKind::Cond) && g && g->n_edges() == 0;
  const double q_prev = edgeless ? 0.0 : detail::snapshot_quality(kind, shared, prev, blf_eta);
  return eta * q_now + (1.0 - eta) * q_prev;
}

/// Cond_Mem averaged over eta in {0, .25, .5, .75, 1}, the reported form.
inline double cond_mem_report(const Partition& part, const QualityView& now, const std::optional<QualityView>& before) {
  double s = 0.0;
  for (double eta : {0.0, 0.25, 0.5, 0.75, 1.0}) s += smoothed_quality(QualityKind::Cond, part, now, before, eta);
  return s / 5.0;
}

// ---------------------------------------------------------------- tracking

constexpr int dump_cluster = -1;

struct TrackEdge {
  int t = 0;  // edge from step t-1 to step t
  int src = 0;
  int dst = 0;
  double weight = 0.0;
};

enum class TrackEventKind { Continue, Grow, Shrink, Split, Merge, Birth, Death };

inline std::string to_string(TrackEventKind k) {
  switch (k) {
    case TrackEventKind::Continue: return "continue";
    case TrackEventKind::Grow: return "grow";
    case TrackEventKind::Shrink: return "shrink";
    case TrackEventKind::Split: return "split";
    case TrackEventKind::Merge: return "merge";
    case TrackEventKind::Birth: return "birth";
    case TrackEventKind::Death: return "death";
  }
  return "?";
}

struct TrackEvent {
  int t = 0;
  TrackEventKind kind = TrackEventKind::Continue;
  std::vector<int> from;  // clusters at t-1
  std::vector<int> to;    // clusters at t
  std::vector<int> sizes_from;
  std::vector<int> sizes_to;

  nlohmann::ordered_json to_json() const {
    return {{"t", t}, {"event", to_string(kind)}, {"from", from}, {"to", to}, {"sizes_from", sizes_from}, {"sizes_to", sizes_to}};
  }
};

struct TrackStep {
  std::vector<TrackEdge> edges;          // kept edges, including rescues
  std::vector<TrackEdge> all_edges;      // before pruning
  std::vector<TrackEvent> events;
  std::vector<int> relabel;              // current cluster -> tracked label index in prev numbering, or -1 (new)
};

/// Bipartite tracking between consecutive partitions. Clusters are the labels
/// of each partition; nodes leaving go to the dump on the right, nodes
/// arriving come from the dump on the left.
inline TrackStep track_clusters(const Partition& prev, const std::vector<std::string>& prev_ids, const Partition& curr,
                                const std::vector<std::string>& curr_ids, int t = 1) {
  if (prev.size() != prev_ids.size() || curr.size() != curr_ids.size()) throw ValidationError("track_clusters: ids do not match labels");
  const std::vector<int> in_curr = detail::positions_of(curr_ids, prev_ids);
  const std::vector<int> in_prev = detail::positions_of(prev_ids, curr_ids);
  bool shared = false;
  for (int p : in_curr) shared = shared || p >= 0;
  if (!shared) throw ValidationError("track_clusters: no shared ids");

  const int kp = prev.k(), kc = curr.k();
  // rows: prev clusters then dump (index kp); cols: curr clusters then dump (index kc)
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(kp + 1, kc + 1);
  for (std::size_t i = 0; i < prev.size(); ++i) {
    const int c = in_curr[i] >= 0 ? curr[static_cast<std::size_t>(in_curr[i])] : kc;
    n(prev[i], c) += 1.0;
  }
  for (std::size_t j = 0; j < curr.size(); ++j)
    if (in_prev[j] < 0) n(kp, curr[j]) += 1.0;
  const auto prev_sizes = prev.counts();
  const auto curr_sizes = curr.counts();
  const auto src_id = [&](int r) { return r == kp ? dump_cluster : r; };
  const auto dst_id = [&](int c) { return c == kc ? dump_cluster : c; };

  TrackStep out;
  std::vector<std::vector<std::pair<int, double>>> kept_out(static_cast<std::size_t>(kp + 1));
  std::vector<std::vector<std::pair<int, double>>> kept_in(static_cast<std::size_t>(kc + 1));
  for (int r = 0; r <= kp; ++r) {
    const double total = n.row(r).sum();
    if (total == 0.0) continue;
    double best = 0.0;
    for (int c = 0; c <= kc; ++c)
      if (n(r, c) > 0.0) {
        out.all_edges.push_back({t, src_id(r), dst_id(c), n(r, c) / total});
        best = std::max(best, n(r, c) / total);
      }
    for (int c = 0; c <= kc; ++c)
      if (n(r, c) > 0.0 && n(r, c) / total == best) {
        out.edges.push_back({t, src_id(r), dst_id(c), best});
        kept_out[static_cast<std::size_t>(r)].push_back({c, best});
        kept_in[static_cast<std::size_t>(c)].push_back({r, best});
      }
  }
  // Rescue: a nonempty current cluster with no kept incoming edge gets its
  // heaviest incoming one.
  for (int c = 0; c < kc; ++c) {
    if (curr_sizes[static_cast<std::size_t>(c)] == 0 || !kept_in[static_cast<std::size_t>(c)].empty()) continue;
    int best_r = -1;
    double best_w = 0.0;
    for (int r = 0; r <= kp; ++r) {
      const double total = n.row(r).sum();
      if (total > 0.0 && n(r, c) / total > best_w) {
        best_w = n(r, c) / total;
        best_r = r;
      }
    }
    if (best_r < 0) continue;
    out.edges.push_back({t, src_id(best_r), c, best_w});
    kept_out[static_cast<std::size_t>(best_r)].push_back({c, best_w});
    kept_in[static_cast<std::size_t>(c)].push_back({best_r, best_w});
  }

  const auto size_of_prev = [&](int r) { return r == kp ? 0 : prev_sizes[static_cast<std::size_t>(r)]; };
  const auto size_of_curr = [&](int c) { return c == kc ? 0 : curr_sizes[static_cast<std::size_t>(c)]; };
  std::vector<char> reported_in(static_cast<std::size_t>(kc + 1), 0);
  for (int r = 0; r < kp; ++r) {
    if (prev_sizes[static_cast<std::size_t>(r)] == 0) continue;
    std::vector<int> targets;
    for (auto [c, w] : kept_out[static_cast<std::size_t>(r)])
      if (c != kc) targets.push_back(c);
    std::sort(targets.begin(), targets.end());
    if (targets.empty()) {
      out.events.push_back({t, TrackEventKind::Death, {r}, {}, {size_of_prev(r)}, {}});
      continue;
    }
    if (targets.size() > 1) {
      TrackEvent e{t, TrackEventKind::Split, {r}, targets, {size_of_prev(r)}, {}};
      for (int c : targets) e.sizes_to.push_back(size_of_curr(c));
      out.events.push_back(e);
      continue;
    }
    const int c = targets.front();
    std::vector<int> sources;
    for (auto [s, w] : kept_in[static_cast<std::size_t>(c)])
      if (s != kp) sources.push_back(s);
    if (sources.size() > 1) continue;  // reported once as a merge below
    const int a = size_of_prev(r), b = size_of_curr(c);
    const TrackEventKind kind = n(r, c) == a && a == b ? TrackEventKind::Continue : b > a ? TrackEventKind::Grow
                                : b < a                 ? TrackEventKind::Shrink
                                                        : TrackEventKind::Continue;
    out.events.push_back({t, kind, {r}, {c}, {a}, {b}});
  }
  for (int c = 0; c < kc; ++c) {
    if (curr_sizes[static_cast<std::size_t>(c)] == 0) continue;
    std::vector<int> sources;
    bool from_dump = false;
    for (auto [s, w] : kept_in[static_cast<std::size_t>(c)]) {
      if (s == kp)
        from_dump = true;
      else
        sources.push_back(s);
    }
    std::sort(sources.begin(), sources.end());
    if (sources.size() > 1) {
      TrackEvent e{t, TrackEventKind::Merge, sources, {c}, {}, {size_of_curr(c)}};
      for (int s : sources) e.sizes_from.push_back(size_of_prev(s));
      out.events.push_back(e);
    } else if (sources.empty() && from_dump) {
      out.events.push_back({t, TrackEventKind::Birth, {}, {c}, {}, {size_of_curr(c)}});
    }
  }

  // Relabeling: each current cluster inherits its dominant predecessor; when
  // several claim the same one, the largest overlap wins.
  out.relabel.assign(static_cast<std::size_t>(kc), -1);
  std::vector<std::pair<double, std::pair<int, int>>> claims;
  for (int c = 0; c < kc; ++c) {
    int best_r = -1;
    double best_w = 0.0;
    for (auto [r, w] : kept_in[static_cast<std::size_t>(c)])
      if (r != kp && (n(r, c) > best_w || (n(r, c) == best_w && r < best_r))) {
        best_w = n(r, c);
        best_r = r;
      }
    if (best_r >= 0) claims.push_back({best_w, {c, best_r}});
  }
  std::stable_sort(claims.begin(), claims.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<char> taken(static_cast<std::size_t>(kp), 0);
  for (const auto& [w, cr] : claims)
    if (!taken[static_cast<std::size_t>(cr.second)]) {
      taken[static_cast<std::size_t>(cr.second)] = 1;
      out.relabel[static_cast<std::size_t>(cr.first)] = cr.second;
    }
  return out;
}

/// Tracks a sequence of partitions and returns labels made consistent over
/// time: clusters keep the label of their dominant predecessor, new ones get
/// fresh labels.
struct TrackedSequence {
  std::vector<std::vector<int>> labels;  // per step, tracked labels
  std::vector<TrackStep> steps;          // steps[t-1] links t-1 to t
  std::vector<TrackEvent> events() const {
    std::vector<TrackEvent> all;
    for (const auto& s : steps) all.insert(all.end(), s.events.begin(), s.events.end());
    return all;
  }
};

inline TrackedSequence track_sequence(const std::vector<Partition>& parts, const std::vector<std::vector<std::string>>& ids) {
  if (parts.size() != ids.size()) throw ValidationError("track_sequence: partitions and ids disagree");
  TrackedSequence out;
  if (parts.empty()) return out;
  std::vector<int> global(static_cast<std::size_t>(parts[0].k()));
  for (int c = 0; c < parts[0].k(); ++c) global[static_cast<std::size_t>(c)] = c;
  int next = parts[0].k();
  out.labels.push_back(parts[0].labels());
  for (std::size_t t = 1; t < parts.size(); ++t) {
    TrackStep step = track_clusters(parts[t - 1], ids[t - 1], parts[t], ids[t], static_cast<int>(t));
    std::vector<int> g(static_cast<std::size_t>(parts[t].k()));
    for (int c = 0; c < parts[t].k(); ++c) {
      const int r = step.relabel[static_cast<std::size_t>(c)];
      g[static_cast<std::size_t>(c)] = r >= 0 ? global[static_cast<std::size_t>(r)] : next++;
    }
    std::vector<int> lab;
    for (int l : parts[t].labels()) lab.push_back(g[static_cast<std::size_t>(l)]);
    out.labels.push_back(std::move(lab));
    out.steps.push_back(std::move(step));
    global = std::move(g);
  }
  return out;
}

inline void write_tracking_csv(std::ostream& out, const TrackedSequence& seq) {
  out << "t,src,dst,weight\n";
  for (const auto& s : seq.steps)
    for (const auto& e : s.edges)
      out << e.t << ',' << (e.src == dump_cluster ? std::string("dump") : std::to_string(e.src)) << ','
          << (e.dst == dump_cluster ? std::string("dump") : std::to_string(e.dst)) << ',' << detail::format_double(e.weight) << '\n';
}

// ---------------------------------------------------------------- driver

struct MkscConfig {
  int k = 2;
  int memory = 1;
  int framework = 1;                 // 1: nu fixed at 1, gamma tuned; 2: gamma fixed at 1, nu tuned
  std::vector<double> gamma_grid{1.0};
  std::vector<double> nu_grid{1.0};
  std::optional<KernelSpec> kernel;  // default: community for graphs, RBF(1) for points
  QualityKind criterion = QualityKind::Mod;  // smoothed criterion used to pick (gamma, nu) per step
  double eta = 0.5;
};

struct MkscRun {
  std::vector<Partition> labels;
  std::vector<std::vector<std::string>> ids;
  std::vector<double> gamma, nu;       // chosen per step
  std::vector<double> residual;
  std::vector<double> smoothed;        // chosen criterion, per step
  std::vector<ScoreMatrix> scores;
  std::vector<Eigen::MatrixXd> alphas;
};

namespace detail {

inline DataMatrix snapshot_features(const Snapshot& s) {
  if (s.points) return *s.points;
  return adjacency_matrix(*s.graph);
}

/// Rows of `previous` features for each id in `current`.
inline std::vector<int> prev_rows_for(const std::vector<std::string>& current, const std::vector<std::string>& previous) {
  return positions_of(previous, current);
}

/// Adjacency rows of a previous graph re-expressed over the current id order
/// so that rows of both snapshots live in the same coordinate system.
inline DataMatrix reindexed_adjacency(const Graph& g, const std::vector<std::string>& ids) {
  DataMatrix out = DataMatrix::Zero(g.n_nodes(), static_cast<Eigen::Index>(ids.size()));
  const std::vector<int> col = positions_of(ids, g.node_ids());
  for (int i = 0; i < g.n_nodes(); ++i) {
    const double* w = g.neighbor_weights(i);
    int idx = 0;
    for (auto [b, e] = g.neighbors(i); b != e; ++b, ++idx)
      if (col[static_cast<std::size_t>(*b)] >= 0) out(i, col[static_cast<std::size_t>(*b)]) = w[idx];
  }
  return out;
}

}  // namespace detail

/// Runs MKSC over a snapshot sequence. At each step every (gamma, nu) pair of
/// the framework's grid is solved and the one with the best smoothed
/// criterion is kept; the first step is plain KSC.
inline MkscRun run_mksc(const SnapshotSequence& seq, const MkscConfig& cfg) {
  seq.validate();
  if (cfg.framework != 1 && cfg.framework != 2) throw ValidationError("run_mksc: framework must be 1 or 2");
  const bool graphs = seq.steps.front().graph.has_value();
  const KernelSpec spec = cfg.kernel.value_or(graphs ? KernelSpec::community() : KernelSpec::rbf(1.0));
  if (!graphs && spec.kind == KernelKind::Community) throw ValidationError("run_mksc: community kernel needs graphs");
  std::vector<double> gammas = cfg.framework == 1 ? cfg.gamma_grid : std::vector<double>{1.0};
  std::vector<double> nus = cfg.framework == 1 ? std::vector<double>{1.0} : cfg.nu_grid;
  if (gammas.empty() || nus.empty()) throw ValidationError("run_mksc: empty grid");
  for (double g : gammas)
    if (!(g > 0.0)) throw ValidationError("run_mksc: gamma must be > 0");
  for (double v : nus)
    if (v < 0.0) throw ValidationError("run_mksc: nu must be >= 0");
  // Ascending grids: ties go to the smaller value, so nu = 0 wins when memory changes nothing.
  std::sort(gammas.begin(), gammas.end());
  std::sort(nus.begin(), nus.end());

  MkscState state;
  state.memory = cfg.memory;
  state.k = cfg.k;
  MkscRun run;
  for (std::size_t t = 0; t < seq.steps.size(); ++t) {
    const Snapshot& s = seq.steps[t];
    const std::vector<std::string>& ids = s.ids;
    KernelMatrix omega;
    DataMatrix feat;
    if (spec.kind == KernelKind::Community) {
      omega = community_kernel(*s.graph);
    } else {
      feat = detail::snapshot_features(s);
      omega = kernel_matrix(spec, feat);
    }
    std::vector<KernelMatrix> cross;
    for (std::size_t r = 0; r < state.history.size(); ++r) {
      const Snapshot& p = seq.steps[t - 1 - r];
      if (spec.kind == KernelKind::Community) {
        cross.push_back(cross_community_kernel(*s.graph, *p.graph));
      } else {
        const DataMatrix pf = graphs ? detail::reindexed_adjacency(*p.graph, ids) : *p.points;
        cross.push_back(cross_kernel(spec, feat, pf, detail::prev_rows_for(ids, p.ids)));
      }
    }
    const std::vector<Eigen::MatrixXd> aligned = align_snapshots(state, ids);

    std::optional<QualityView> before;
    if (t > 0) {
      const Snapshot& p = seq.steps[t - 1];
      before = QualityView{p.ids, p.graph ? &*p.graph : nullptr, p.truth.size() ? &p.truth : nullptr, &run.scores.back()};
    }
    const QualityView now{ids, s.graph ? &*s.graph : nullptr, s.truth.size() ? &s.truth : nullptr, nullptr};

    std::optional<MkscStep> best;
    std::string last_error;
    MkscState best_state;
    double best_q = failed_score, best_g = 0.0, best_n = 0.0;
    for (double g : gammas)
      for (double nu : nus) {
        MkscState trial = state;
        trial.gamma = g;
        trial.nu = nu;
        try {
          MkscStep st = mksc_step(trial, omega, cross, aligned, ids);
          QualityView nv = now;
          nv.scores = &st.scores;
          double q = smoothed_quality(cfg.criterion, st.labels, nv, before, cfg.eta);
          if (cfg.criterion == QualityKind::Cond) q = -q;
          if (!best || q > best_q) {
            best_q = q;
            best = std::move(st);
            best_state = std::move(trial);
            best_g = g;
            best_n = nu;
          }
        } catch (const NumericalError& e) {
          last_error = e.what();
        }
        if (t == 0) break;  // first step ignores the grid
      }
    if (!best) throw AllCandidatesFailed("run_mksc: every (gamma, nu) failed at step " + std::to_string(t) + " (last: " + last_error + ")");
    state = std::move(best_state);
    run.labels.push_back(best->labels);
    run.ids.push_back(ids);
    run.gamma.push_back(best_g);
    run.nu.push_back(t == 0 ? 0.0 : best_n);
    run.residual.push_back(best->residual);
    run.smoothed.push_back(cfg.criterion == QualityKind::Cond ? -best_q : best_q);
    run.scores.push_back(best->scores);
    run.alphas.push_back(best->alpha);
  }
  return run;
}

/// Per-snapshot KSC baseline on the same kernels.
inline std::vector<Partition> run_ksc_per_snapshot(const SnapshotSequence& seq, int k, const KernelSpec& spec) {
  std::vector<Partition> out;
  for (const auto& s : seq.steps) {
    const KernelMatrix K = spec.kind == KernelKind::Community ? community_kernel(*s.graph)
                                                               : kernel_matrix(spec, detail::snapshot_features(s));
    out.push_back(train_ksc(K, k).train_labels);
  }
  return out;
}

}  // namespace speclust
