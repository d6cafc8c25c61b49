#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "speclust/data.hpp"
#include "speclust/error.hpp"
#include "speclust/kernels.hpp"
#include "speclust/ksc.hpp"
#include "speclust/metrics.hpp"
#include "speclust/parallel.hpp"
#include "speclust/sksc.hpp"

namespace speclust {

constexpr double failed_score = -std::numeric_limits<double>::infinity();

enum class Criterion { Blf, Ams, Mod };

inline std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::Blf: return "blf";
    case Criterion::Ams: return "ams";
    case Criterion::Mod: return "mod";
  }
  return "?";
}

inline Criterion criterion_from_string(const std::string& s) {
  if (s == "blf") return Criterion::Blf;
  if (s == "ams") return Criterion::Ams;
  if (s == "mod") return Criterion::Mod;
  throw ValidationError("unknown criterion '" + s + "'");
}

struct GridSpec {
  std::vector<int> ks;
  std::vector<double> params{1.0};  // kernel bandwidths; a single dummy value for parameter-free kernels
  Criterion criterion = Criterion::Ams;
  double eta = 0.5;
  double train_fraction = 0.7;
  double validation_fraction = 0.3;

  void validate() const {
    if (ks.empty() || params.empty()) throw ValidationError("GridSpec: empty grid");
    for (int k : ks)
      if (k < 1) throw ValidationError("GridSpec: k must be >= 1");
    if (!(train_fraction > 0 && train_fraction < 1 && validation_fraction > 0 && validation_fraction < 1) ||
        train_fraction + validation_fraction > 1.0 + 1e-12)
      throw ValidationError("GridSpec: split fractions must lie in (0,1) and sum to at most 1");
    if (eta < 0.0 || eta > 1.0) throw ValidationError("GridSpec: eta must lie in [0,1]");
  }
};

struct CellScore {
  int k = 0;
  double param = 0.0;
  double score = failed_score;
  std::string failure;  // empty when the cell succeeded

  bool ok() const { return failure.empty() && std::isfinite(score); }
};

struct SelectionResult {
  std::vector<CellScore> cells;  // sorted by (k, param)
  int best_k = 0;
  double best_param = 0.0;
  double best_score = failed_score;

  void write_csv(std::ostream& out) const {
    out << "k,param,score\n";
    for (const auto& c : cells) out << c.k << ',' << detail::format_double(c.param) << ',' << detail::format_double(c.score) << '\n';
  }
};

/// Share of variance along each cluster's principal axis in score space,
/// rescaled so spherical clusters give 0 and collinear ones give 1.
inline double linefit(const ScoreMatrix& scores, const Partition& part) {
  const int k = part.k();
  if (k <= 2) return 1.0;
  const double floor = 1.0 / (k - 1);
  const auto counts = part.counts();
  const double n = static_cast<double>(part.size());
  double total = 0.0;
  for (int p = 0; p < k; ++p) {
    const int np = counts[static_cast<std::size_t>(p)];
    if (np == 0) continue;
    double rho = 1.0;
    if (np >= 2) {
      Eigen::MatrixXd rows(np, scores.cols());
      int r = 0;
      for (std::size_t i = 0; i < part.size(); ++i)
        if (part[i] == p) rows.row(r++) = scores.row(static_cast<Eigen::Index>(i));
      const Eigen::MatrixXd c = rows.rowwise() - rows.colwise().mean();
      const Eigen::MatrixXd cov = c.transpose() * c / np;
      const double tr = cov.trace();
      if (tr > 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
        rho = es.eigenvalues().maxCoeff() / tr;
      }
    }
    total += np / n * (rho - floor) / (1.0 - floor);
  }
  return std::clamp(total, 0.0, 1.0);
}

/// Balanced line fit: eta * linefit + (1 - eta) * min/max cluster size.
inline double blf(const ScoreMatrix& val_scores, const Partition& val_part, double eta) {
  if (val_part.k() < 2) throw ValidationError("blf: need k >= 2");
  if (static_cast<Eigen::Index>(val_part.size()) != val_scores.rows()) throw ValidationError("blf: size mismatch");
  const auto counts = val_part.counts();
  const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
  if (*mn == 0) return failed_score;
  const double balance = static_cast<double>(*mn) / *mx;
  return eta * linefit(val_scores, val_part) + (1.0 - eta) * balance;
}

/// Evaluates every (k, param) cell, turning numerical failures into sentinel
/// scores. The best cell is the finite maximum; ties prefer smaller k, then
/// smaller param, so the outcome does not depend on grid order.
inline SelectionResult select(const GridSpec& grid, const std::function<double(int, double)>& evaluate) {
  grid.validate();
  std::vector<CellScore> cells;
  for (int k : grid.ks)
    for (double p : grid.params) cells.push_back({k, p, failed_score, {}});
  std::sort(cells.begin(), cells.end(), [](const CellScore& a, const CellScore& b) {
    return a.k != b.k ? a.k < b.k : a.param < b.param;
  });
  cells.erase(std::unique(cells.begin(), cells.end(),
                          [](const CellScore& a, const CellScore& b) { return a.k == b.k && a.param == b.param; }),
              cells.end());
  parallel_for(static_cast<long>(cells.size()), [&](long i) {
    auto& c = cells[static_cast<std::size_t>(i)];
    try {
      c.score = evaluate(c.k, c.param);
      if (!std::isfinite(c.score)) c.failure = "non-finite score";
    } catch (const NumericalError& e) {
      c.score = failed_score;
      c.failure = e.what();
    }
  });
  SelectionResult r;
  r.cells = std::move(cells);
  for (const auto& c : r.cells)
    if (c.ok() && c.score > r.best_score) {
      r.best_score = c.score;
      r.best_k = c.k;
      r.best_param = c.param;
    }
  if (!std::isfinite(r.best_score)) throw AllCandidatesFailed("select: every grid cell failed");
  return r;
}

struct ModularityCandidate {
  int k = 0;
  double param = 0.0;
  std::optional<Partition> validation_labels;  // nullopt when training failed
};

/// Scores each candidate's validation partition by modularity on the
/// validation graph.
inline SelectionResult modularity_select(const std::vector<ModularityCandidate>& candidates, const Graph& val_graph) {
  SelectionResult r;
  for (const auto& c : candidates) {
    CellScore cell{c.k, c.param, failed_score, {}};
    if (!c.validation_labels)
      cell.failure = "training failed";
    else
      cell.score = modularity(val_graph, *c.validation_labels);
    r.cells.push_back(cell);
  }
  std::sort(r.cells.begin(), r.cells.end(), [](const CellScore& a, const CellScore& b) {
    return a.k != b.k ? a.k < b.k : a.param < b.param;
  });
  for (const auto& c : r.cells)
    if (c.ok() && c.score > r.best_score) {
      r.best_score = c.score;
      r.best_k = c.k;
      r.best_param = c.param;
    }
  if (!std::isfinite(r.best_score)) throw AllCandidatesFailed("modularity_select: every candidate failed");
  return r;
}

struct Split {
  std::vector<int> train;
  std::vector<int> validation;
};

/// Seeded random split; both index lists come back sorted.
inline Split split_indices(int n, double train_fraction, double validation_fraction, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const int n_tr = std::clamp(static_cast<int>(std::lround(train_fraction * n)), 1, n);
  const int n_val = std::clamp(static_cast<int>(std::lround(validation_fraction * n)), 0, n - n_tr);
  Split s{{idx.begin(), idx.begin() + n_tr}, {idx.begin() + n_tr, idx.begin() + n_tr + n_val}};
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

inline DataMatrix take_rows(const DataMatrix& X, const std::vector<int>& rows) {
  DataMatrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return out;
}

/// Score of one cell for point data: train on `train`, evaluate the chosen
/// criterion on `val`. `param` is the kernel bandwidth when the kernel has one.
inline double score_points_cell(Criterion criterion, KernelKind kind, const DataMatrix& train, const DataMatrix& val,
                                int k, double param, double eta) {
  if (criterion == Criterion::Mod) throw ValidationError("select: modularity needs a graph");
  KernelSpec spec{kind, param};
  const KscFit fit = train_ksc(spec, train, k);
  const ScoreMatrix e = project_points(fit.model, val);
  if (criterion == Criterion::Blf) return blf(e, assign_hamming(e, fit.model.codebook), eta);
  const PrototypeSet protos = compute_prototypes(fit.train_scores, fit.train_labels);
  return ams(soft_assign(e, protos));
}

/// Train/validation model selection on point data.
inline SelectionResult select_points(const GridSpec& grid, KernelKind kind, const DataMatrix& X, std::uint64_t seed) {
  grid.validate();
  const Split s = split_indices(static_cast<int>(X.rows()), grid.train_fraction, grid.validation_fraction, seed);
  const DataMatrix train = take_rows(X, s.train);
  const DataMatrix val = take_rows(X, s.validation);
  return select(grid, [&](int k, double p) {
    try {
      return score_points_cell(grid.criterion, kind, train, val, k, p, grid.eta);
    } catch (const EmptyCluster& e) {
      throw NumericalError(e.what());
    }
  });
}

}  // namespace speclust
