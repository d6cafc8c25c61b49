#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace speclust {

/// Input that violates an operation's preconditions (maps to CLI exit code 2).
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a defined result (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ZeroDegreeRow : public NumericalError {
public:
  explicit ZeroDegreeRow(std::vector<int> rows)
      : NumericalError(describe(rows)), rows_(std::move(rows)) {}

  const std::vector<int>& rows() const noexcept { return rows_; }

private:
  static std::string describe(const std::vector<int>& rows) {
    std::string msg = "train_ksc: kernel rows with degree <= degree_floor:";
    for (std::size_t i = 0; i < rows.size() && i < 20; ++i)
      msg += " " + std::to_string(rows[i]);
    if (rows.size() > 20) msg += " ...";
    return msg;
  }

  std::vector<int> rows_;
};

class DegenerateCodebook : public NumericalError {
public:
  DegenerateCodebook(int wanted, int distinct)
      : NumericalError("train_ksc: only " + std::to_string(distinct) +
                       " distinct sign patterns for k=" + std::to_string(wanted)),
        wanted_(wanted), distinct_(distinct) {}

  int wanted() const noexcept { return wanted_; }
  int distinct() const noexcept { return distinct_; }

private:
  int wanted_;
  int distinct_;
};

class NonRealSpectrum : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class SingularSystem : public NumericalError {
public:
  SingularSystem(int column, double condition)
      : NumericalError("mksc_step: singular system for score column " +
                       std::to_string(column) + " (condition estimate " +
                       std::to_string(condition) + ")"),
        column_(column), condition_(condition) {}

  int column() const noexcept { return column_; }
  double condition() const noexcept { return condition_; }

private:
  int column_;
  double condition_;
};

class EmptyCluster : public ValidationError {
public:
  explicit EmptyCluster(int cluster)
      : ValidationError("cluster " + std::to_string(cluster) + " has no members"),
        cluster_(cluster) {}

  int cluster() const noexcept { return cluster_; }

private:
  int cluster_;
};

class AllCandidatesFailed : public NumericalError {
public:
  using NumericalError::NumericalError;
};

}  // namespace speclust
