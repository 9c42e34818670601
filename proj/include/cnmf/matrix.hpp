#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cnmf {

using Index = Eigen::Index;

// Row-major so that a contiguous run of rows is a contiguous run of memory;
// row blocks of a file map onto this layout without reshuffling.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using ConstMatrixRef = Eigen::Ref<const DenseMatrix>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class InfeasibleRankError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Raised when an iterative solver hits its cap; carries the best iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, DenseMatrix best)
      : Error(what), best_(std::move(best)) {}
  const DenseMatrix& best_iterate() const { return best_; }

 private:
  DenseMatrix best_;
};

class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, std::vector<Index> picks)
      : Error(what), picks_(std::move(picks)) {}
  const std::vector<Index>& picks() const { return picks_; }

 private:
  std::vector<Index> picks_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

inline bool all_finite(const ConstMatrixRef& m) { return m.allFinite(); }

// Throws NumericError naming `where` when `m` holds NaN or Inf.
inline void require_finite(const ConstMatrixRef& m, const std::string& where) {
  if (!m.allFinite()) throw NumericError("non-finite value in " + where);
}

}  // namespace cnmf
