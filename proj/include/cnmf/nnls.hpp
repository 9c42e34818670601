#pragma once

#include "cnmf/matrix.hpp"

namespace cnmf {

struct NnlsOptions {
  // KKT tolerance on the gradient, scaled by max(1, max |Cᵀd|) per column.
  double tol = 1e-10;
  // Active-set exchanges allowed per column, as a multiple of q.
  int exchange_factor = 3;
};

/// min_{H >= 0} ‖D − C H‖_F for C (p x q) and D (p x k) of any sign.
///
/// Lawson–Hanson active set run per column against a Gram matrix CᵀC and
/// right-hand side CᵀD that are formed once. A passive-set system that is not
/// positive definite is solved with a 1e-12·trace ridge. Throws
/// ConvergenceError (with the best iterate) when a column exceeds its
/// exchange cap.
DenseMatrix nnls_solve(const ConstMatrixRef& c, const ConstMatrixRef& d, const NnlsOptions& opts = {});

/// Same, from precomputed gram = CᵀC (q x q) and ctd = CᵀD (q x k).
DenseMatrix nnls_solve_gram(const ConstMatrixRef& gram, const ConstMatrixRef& ctd, const NnlsOptions& opts = {});

/// Largest KKT violation of H for min ‖D − CH‖: negative entries of H,
/// negative gradient entries where H = 0 and |gradient| where H > 0. Each
/// column's gradient is divided by max(1, max |Cᵀd_j|).
double nnls_kkt_violation(const ConstMatrixRef& c, const ConstMatrixRef& d, const ConstMatrixRef& h);

}  // namespace cnmf
