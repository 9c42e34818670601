#pragma once

#include <cstdint>

#include "cnmf/matrix_store.hpp"

namespace cnmf {

/// Parameters of the randomized range finder.
struct CompressionConfig {
  Index rank = 1;        // target rank r
  Index oversample = 10; // r_ov
  int power = 0;         // exponent w of (AAᵀ)^w
  std::uint64_t seed = 0;
  // Orthonormalize after every power pass. Off by default: the plain
  // iteration is what the range finder specifies.
  bool reorthogonalize = false;

  Index sketch_size() const { return rank + oversample; }
};

/// Defaults used by the NMF drivers (w = 4, r_ov = 10).
CompressionConfig nmf_compression_defaults(Index rank, std::uint64_t seed);
/// Defaults used by separable NMF (w = 0, r_ov = 10).
CompressionConfig snmf_compression_defaults(Index rank, std::uint64_t seed);

/// Replaces r_ov so that r + r_ov = min(max(20, r + r_ov), n), then caps the
/// sketch at min(m, n). Throws InfeasibleRankError when r >= min(m, n).
CompressionConfig adjust_config(CompressionConfig cfg, Index m, Index n);

/// Throws unless 1 <= r, 0 <= r_ov, w >= 0 and r + r_ov <= min(m, n).
void validate_config(const CompressionConfig& cfg, Index m, Index n);

enum class BasisKind { structured, gaussian };

struct CompressionBasis {
  MatrixStore q;  // rows x (r + r_ov)
  BasisKind kind = BasisKind::structured;
  CompressionConfig config;

  Index rows() const { return q.rows(); }
  Index size() const { return q.cols(); }
};

/// Orthonormal Q spanning (AAᵀ)^w A Ω for a seeded Gaussian Ω (n x s).
/// In-core stores use one dense QR; file-backed stores go through
/// tsqr_compress. Q carries the nonnegative-diagonal QR sign convention.
CompressionBasis structured_compress(const MatrixStore& a, const CompressionConfig& cfg,
                                     const Resources& res = Resources::from_env());
CompressionBasis structured_compress(const DenseMatrix& a, const CompressionConfig& cfg);

/// Same for Aᵀ without forming it (n x s basis). The transposed sketch draws
/// an m x s Gaussian Ω from cfg.seed.
CompressionBasis structured_compress_transpose(const MatrixStore& a, const CompressionConfig& cfg,
                                               const Resources& res = Resources::from_env());

/// The in-memory sketch before orthonormalization: (AAᵀ)^w A Ω, with optional
/// re-orthonormalization after each pass.
DenseMatrix range_sketch(const ConstMatrixRef& a, const ConstMatrixRef& omega, int power, bool reorthogonalize);

/// Data-agnostic baseline Q = s^{-1/2} Ω with Ω an m x s Gaussian matrix.
CompressionBasis gaussian_compress(Index m, Index s, std::uint64_t seed);

enum class Norm { frobenius, spectral };

/// ‖A − QQᵀA‖ in the requested norm. The spectral norm comes from
/// power iteration (see spectral_norm).
double compression_error(const DenseMatrix& a, const CompressionBasis& basis, Norm norm);

/// Largest singular value by power iteration on MᵀM from a fixed-seed start,
/// stopping after `max_steps` or once the estimate changes by less than
/// `rel_tol` relatively.
double spectral_norm(const ConstMatrixRef& m, int max_steps = 100, double rel_tol = 1e-6);

}  // namespace cnmf
