#pragma once

#include <string>
#include <vector>

#include "cnmf/compress.hpp"
#include "cnmf/matrix_store.hpp"

namespace cnmf {

enum class Selector { spa, xray };
enum class Reduction { qr, compressed };

std::string to_string(Selector s);
std::string to_string(Reduction r);

/// A ≈ A[:, k] · y with y >= 0.
struct SnmfResult {
  std::vector<Index> k;  // selection order
  DenseMatrix y;         // r x n
  double rel_error_reduced = 0.0;
  double rel_error_full = 0.0;
  Index reduced_rows = 0;  // rows of the matrix the selector and NNLS ran on
};

/// Successive projection: r times, take the column of largest squared norm
/// (lowest index on ties) and project every column onto the orthogonal
/// complement of it. Throws RankDeficiencyError, carrying the picks so far,
/// once every remaining residual norm is <= 1e-14 times the largest initial
/// column norm.
std::vector<Index> select_columns_spa(const ConstMatrixRef& r_mat, Index rank);

/// Greedy XRAY with the "max" rule. Each round takes the column i of largest
/// residual norm and adds the unpicked column j maximizing
/// Res_iᵀ R_j / (pᵀ R_j) with p = R·1 (columns with pᵀR_j <= 0 are skipped),
/// then refits the residual by NNLS against the picked columns. Ties go to
/// the lowest index. Errors as for SPA.
std::vector<Index> select_columns_xray(const ConstMatrixRef& r_mat, Index rank);

/// Y = argmin_{Y >= 0} ‖R − R[:, k] Y‖_F, one NNLS per column.
DenseMatrix snmf_right_factor(const ConstMatrixRef& r_mat, const std::vector<Index>& k);

struct SnmfOptions {
  Index rank = 1;
  Selector selector = Selector::spa;
  Reduction reduction = Reduction::compressed;
  /// Used by the compressed reduction after adjust_config. rank is taken
  /// from SnmfOptions::rank.
  CompressionConfig config = snmf_compression_defaults(1, 0);
  Resources resources = Resources::from_env();
};

/// Three steps: reduce A to R (QR: R of a QR factorization of A, by TSQR when
/// A is tall; compressed: R = QᵀA with Q from structured_compress), select r
/// extreme columns of R, then solve for Y against R[:, k]. Reports the
/// relative error in the reduced space and, from one pass over A, in the
/// original space.
SnmfResult snmf(const MatrixStore& a, const SnmfOptions& opts);

/// The reduced matrix used by snmf for the given reduction.
DenseMatrix snmf_reduce(const MatrixStore& a, Reduction reduction, const CompressionConfig& cfg,
                        const Resources& res);

}  // namespace cnmf
