#include "cnmf/compress.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cnmf/rng.hpp"
#include "cnmf/tsqr.hpp"

namespace cnmf {

CompressionConfig nmf_compression_defaults(Index rank, std::uint64_t seed) {
  return CompressionConfig{rank, 10, 4, seed, false};
}

CompressionConfig snmf_compression_defaults(Index rank, std::uint64_t seed) {
  return CompressionConfig{rank, 10, 0, seed, false};
}

CompressionConfig adjust_config(CompressionConfig cfg, Index m, Index n) {
  if (cfg.rank < 1) throw ArgumentError("rank must be >= 1");
  if (cfg.oversample < 0) throw ArgumentError("oversampling must be >= 0");
  if (cfg.rank >= std::min(m, n)) {
    throw InfeasibleRankError("rank " + std::to_string(cfg.rank) + " is infeasible for a " + std::to_string(m) +
                              "x" + std::to_string(n) + " matrix (needs rank < min(m, n))");
  }
  Index sketch = std::min(std::max<Index>(20, cfg.rank + cfg.oversample), n);
  sketch = std::min(sketch, m);
  cfg.oversample = sketch - cfg.rank;
  return cfg;
}

void validate_config(const CompressionConfig& cfg, Index m, Index n) {
  if (cfg.rank < 1) throw ArgumentError("rank must be >= 1");
  if (cfg.oversample < 0) throw ArgumentError("oversampling must be >= 0");
  if (cfg.power < 0) throw ArgumentError("power exponent must be >= 0");
  if (cfg.sketch_size() > std::min(m, n)) {
    throw InfeasibleRankError("r + r_ov = " + std::to_string(cfg.sketch_size()) + " exceeds min(m, n) = " +
                              std::to_string(std::min(m, n)));
  }
}

DenseMatrix range_sketch(const ConstMatrixRef& a, const ConstMatrixRef& omega, int power, bool reorthogonalize) {
  DenseMatrix b = a * omega;
  require_finite(b, "compression pass 1 (A Omega)");
  for (int i = 0; i < power; ++i) {
    DenseMatrix y = a.transpose() * b;
    if (reorthogonalize) y = thin_qr(y).q;
    require_finite(y, "compression pass " + std::to_string(2 * i + 2) + " (A^T B)");
    b.noalias() = a * y;
    if (reorthogonalize && i + 1 < power) b = thin_qr(b).q;
    require_finite(b, "compression pass " + std::to_string(2 * i + 3) + " (A B)");
  }
  return b;
}

CompressionBasis structured_compress(const DenseMatrix& a, const CompressionConfig& cfg) {
  return structured_compress(MatrixStore::in_core(a, std::max<Index>(a.rows(), 1)), cfg);
}

CompressionBasis structured_compress(const MatrixStore& a, const CompressionConfig& cfg, const Resources& res) {
  validate_config(cfg, a.rows(), a.cols());
  if (a.file_backed()) return tsqr_compress(a, cfg, res);
  Rng rng(cfg.seed);
  const DenseMatrix omega = gaussian_matrix(a.cols(), cfg.sketch_size(), rng);
  const DenseMatrix b = range_sketch(a.dense(), omega, cfg.power, cfg.reorthogonalize);
  QrFactors qr = thin_qr(b);
  return CompressionBasis{MatrixStore::in_core(std::move(qr.q), a.block_rows()), BasisKind::structured, cfg};
}

CompressionBasis structured_compress_transpose(const MatrixStore& a, const CompressionConfig& cfg,
                                               const Resources& res) {
  validate_config(cfg, a.rows(), a.cols());
  if (a.file_backed()) return tsqr_compress_transpose(a, cfg, res);
  const DenseMatrix at = a.dense().transpose();
  return structured_compress(MatrixStore::in_core(at, default_block_rows(at.cols(), res)), cfg, res);
}

CompressionBasis gaussian_compress(Index m, Index s, std::uint64_t seed) {
  if (m < 1 || s < 1) throw ArgumentError("gaussian_compress: dimensions must be >= 1");
  Rng rng(seed);
  DenseMatrix q = gaussian_matrix(m, s, rng) / std::sqrt(static_cast<double>(s));
  CompressionConfig cfg;
  cfg.rank = s;
  cfg.oversample = 0;
  cfg.seed = seed;
  return CompressionBasis{MatrixStore::in_core(std::move(q)), BasisKind::gaussian, cfg};
}

double compression_error(const DenseMatrix& a, const CompressionBasis& basis, Norm norm) {
  if (basis.rows() != a.rows()) {
    throw ArgumentError("compression_error: basis has " + std::to_string(basis.rows()) + " rows, matrix has " +
                        std::to_string(a.rows()));
  }
  const DenseMatrix q = basis.q.to_dense();
  const DenseMatrix qta = q.transpose() * a;
  DenseMatrix residual = a;
  residual.noalias() -= q * qta;
  return norm == Norm::frobenius ? residual.norm() : spectral_norm(residual);
}

double spectral_norm(const ConstMatrixRef& m, int max_steps, double rel_tol) {
  if (m.size() == 0) return 0.0;
  Rng rng(0x5eedULL);
  Vector v(m.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  v.normalize();
  double estimate = 0.0;
  for (int step = 0; step < max_steps; ++step) {
    const Vector u = m * v;
    const double next = u.norm();
    if (next == 0.0) return 0.0;
    Vector w = m.transpose() * u;
    const double wn = w.norm();
    if (wn == 0.0) return next;
    v = w / wn;
    if (step > 0 && std::abs(next - estimate) <= rel_tol * next) return next;
    estimate = next;
  }
  return (m * v).norm();
}

}  // namespace cnmf
