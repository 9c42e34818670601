#include "cnmf/snmf.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <string>

#include "cnmf/nnls.hpp"
#include "cnmf/tsqr.hpp"

namespace cnmf {
namespace {

constexpr double kDeficiencyTol = 1e-14;

void check_selection(const ConstMatrixRef& r_mat, Index rank) {
  if (rank < 1) throw ArgumentError("selection rank must be >= 1");
  if (rank > std::min(r_mat.rows(), r_mat.cols())) {
    throw InfeasibleRankError("selection rank " + std::to_string(rank) + " exceeds min(rows, cols) = " +
                              std::to_string(std::min(r_mat.rows(), r_mat.cols())) + " of the reduced matrix");
  }
  require_finite(r_mat, "column selection input");
}

[[noreturn]] void deficient(const char* who, const std::vector<Index>& picks, Index rank) {
  throw RankDeficiencyError(std::string(who) + ": residual vanished after " + std::to_string(picks.size()) + " of " +
                                std::to_string(rank) + " picks",
                            picks);
}

DenseMatrix gather_columns(const ConstMatrixRef& m, const std::vector<Index>& k) {
  DenseMatrix out(m.rows(), static_cast<Index>(k.size()));
  for (std::size_t j = 0; j < k.size(); ++j) out.col(static_cast<Index>(j)) = m.col(k[j]);
  return out;
}

}  // namespace

std::string to_string(Selector s) { return s == Selector::spa ? "spa" : "xray"; }
std::string to_string(Reduction r) { return r == Reduction::qr ? "qr" : "compressed"; }

std::vector<Index> select_columns_spa(const ConstMatrixRef& r_mat, Index rank) {
  check_selection(r_mat, rank);
  Eigen::MatrixXd res = r_mat;
  const double floor = kDeficiencyTol * res.colwise().norm().maxCoeff();
  std::vector<bool> taken(static_cast<std::size_t>(res.cols()), false);
  std::vector<Index> picks;
  while (static_cast<Index>(picks.size()) < rank) {
    const Eigen::RowVectorXd norms = res.colwise().squaredNorm();
    Index best = -1;
    for (Index j = 0; j < res.cols(); ++j) {
      if (!taken[j] && (best < 0 || norms(j) > norms(best))) best = j;
    }
    if (best < 0 || std::sqrt(norms(best)) <= floor) deficient("spa", picks, rank);
    picks.push_back(best);
    taken[best] = true;
    const Eigen::VectorXd u = res.col(best) / std::sqrt(norms(best));
    const Eigen::RowVectorXd coef = u.transpose() * res;
    res.noalias() -= u * coef;
  }
  return picks;
}

std::vector<Index> select_columns_xray(const ConstMatrixRef& r_mat, Index rank) {
  check_selection(r_mat, rank);
  const Index n = r_mat.cols();
  const Eigen::VectorXd p = r_mat.rowwise().sum();
  const Eigen::RowVectorXd denom = p.transpose() * r_mat;
  const double floor = kDeficiencyTol * r_mat.colwise().norm().maxCoeff();

  DenseMatrix res = r_mat;
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  std::vector<Index> picks;
  while (static_cast<Index>(picks.size()) < rank) {
    const Eigen::RowVectorXd norms = res.colwise().norm();
    Index i = 0;
    for (Index j = 1; j < n; ++j) {
      if (norms(j) > norms(i)) i = j;
    }
    if (norms(i) <= floor) deficient("xray", picks, rank);
    const Eigen::RowVectorXd corr = res.col(i).transpose() * r_mat;
    Index best = -1;
    double best_score = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (taken[j] || !(denom(j) > 0.0)) continue;
      const double score = corr(j) / denom(j);
      if (best < 0 || score > best_score) {
        best = j;
        best_score = score;
      }
    }
    if (best < 0) deficient("xray", picks, rank);
    picks.push_back(best);
    taken[best] = true;
    const DenseMatrix basis = gather_columns(r_mat, picks);
    res = r_mat - basis * nnls_solve(basis, r_mat);
  }
  return picks;
}

DenseMatrix snmf_right_factor(const ConstMatrixRef& r_mat, const std::vector<Index>& k) {
  if (k.empty()) throw ArgumentError("snmf_right_factor: empty column set");
  std::vector<bool> seen(static_cast<std::size_t>(r_mat.cols()), false);
  for (const Index j : k) {
    if (j < 0 || j >= r_mat.cols()) throw ArgumentError("snmf_right_factor: column index out of range");
    if (seen[j]) throw ArgumentError("snmf_right_factor: duplicate column index");
    seen[j] = true;
  }
  return nnls_solve(gather_columns(r_mat, k), r_mat);
}

DenseMatrix snmf_reduce(const MatrixStore& a, Reduction reduction, const CompressionConfig& cfg,
                        const Resources& res) {
  if (reduction == Reduction::compressed) {
    const CompressionBasis basis = structured_compress(a, cfg, res);
    return transpose_times(a, basis.q).transpose();
  }
  if (a.rows() >= a.cols()) {
    return tsqr(a.with_block_rows(std::max(a.block_rows(), a.cols())), res).r;
  }
  // Fat input: R of a full Householder QR, min(m, n) x n.
  const DenseMatrix dense = a.to_dense();
  Eigen::HouseholderQR<DenseMatrix> qr(dense);
  DenseMatrix r = qr.matrixQR().topRows(a.rows()).triangularView<Eigen::Upper>();
  return r;
}

SnmfResult snmf(const MatrixStore& a, const SnmfOptions& opts) {
  const Index m = a.rows();
  const Index n = a.cols();
  if (opts.rank < 1) throw ArgumentError("rank must be >= 1");
  if (opts.rank > std::min(m, n)) {
    throw InfeasibleRankError("rank " + std::to_string(opts.rank) + " exceeds min(m, n) = " +
                              std::to_string(std::min(m, n)));
  }
  DenseMatrix reduced;
  if (opts.reduction == Reduction::compressed) {
    CompressionConfig cfg = opts.config;
    cfg.rank = opts.rank;
    reduced = snmf_reduce(a, opts.reduction, adjust_config(cfg, m, n), opts.resources);
  } else {
    reduced = snmf_reduce(a, opts.reduction, opts.config, opts.resources);
  }

  SnmfResult out;
  out.reduced_rows = reduced.rows();
  out.k = opts.selector == Selector::spa ? select_columns_spa(reduced, opts.rank)
                                         : select_columns_xray(reduced, opts.rank);
  out.y = snmf_right_factor(reduced, out.k);

  const double reduced_sq = reduced.squaredNorm();
  if (reduced_sq == 0.0) throw UndefinedMetricError("snmf: ‖A‖_F = 0");
  out.rel_error_reduced = (reduced - gather_columns(reduced, out.k) * out.y).norm() / std::sqrt(reduced_sq);

  double residual = 0.0;
  double total = 0.0;
  a.for_each_block([&](Index, const ConstMatrixRef& block) {
    total += block.squaredNorm();
    residual += (block - gather_columns(block, out.k) * out.y).squaredNorm();
  });
  if (total == 0.0) throw UndefinedMetricError("snmf: ‖A‖_F = 0");
  out.rel_error_full = std::sqrt(residual / total);
  return out;
}

}  // namespace cnmf
