#pragma once

#include <memory>

#include "cnmf/compress.hpp"
#include "cnmf/matrix_store.hpp"

namespace cnmf {

struct QrFactors {
  DenseMatrix q;  // rows x k, orthonormal columns
  DenseMatrix r;  // k x cols, upper trapezoidal, k = min(rows, cols)
};

/// Flips the sign of column j of q and row j of r wherever r(j, j) < 0.
void canonicalize_signs(DenseMatrix& q, DenseMatrix& r);

/// Thin Householder QR with a nonnegative R diagonal. Entries of R below the
/// diagonal are exactly zero.
QrFactors thin_qr(const ConstMatrixRef& a);

struct TsqrResult {
  MatrixStore q;  // m x n, orthonormal columns; file-backed when large
  DenseMatrix r;  // n x n upper triangular, nonnegative diagonal
};

/// Direct TSQR fed one row block at a time.
///
/// Pass 1 (add_block) factors each block and keeps its Q factor in memory or,
/// when `spill` is set, in a scratch file. finish() runs the single
/// centralized QR of the stacked R factors, then pass 2 forms each output
/// block as Q1_i * Q2_i.
class TsqrAccumulator {
 public:
  TsqrAccumulator(Index rows, Index cols, const Resources& res, bool spill, Index output_block_rows);
  ~TsqrAccumulator();
  TsqrAccumulator(const TsqrAccumulator&) = delete;
  TsqrAccumulator& operator=(const TsqrAccumulator&) = delete;

  void add_block(const ConstMatrixRef& block);
  TsqrResult finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// TSQR over the row blocks of `a`. Requires cols <= block_rows and
/// cols <= rows. Pass-1 factors spill to scratch when `a` is file-backed.
TsqrResult tsqr(const MatrixStore& a, const Resources& res = Resources::from_env());

/// Structured compression computed block by block so that B = (AAᵀ)^w A Ω is
/// never held whole: for w = 0 each block A_i Ω goes straight into TSQR; for
/// w > 0 the skinny intermediates of the 2w+1 alternating passes are kept in
/// memory or scratch files, and the last pass streams into TSQR.
CompressionBasis tsqr_compress(const MatrixStore& a, const CompressionConfig& cfg,
                               const Resources& res = Resources::from_env());

/// Basis for the range of Aᵀ (n x s), computed from row-block passes over A.
CompressionBasis tsqr_compress_transpose(const MatrixStore& a, const CompressionConfig& cfg,
                                         const Resources& res = Resources::from_env());

}  // namespace cnmf
