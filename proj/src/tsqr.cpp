#include "cnmf/tsqr.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "cnmf/rng.hpp"

namespace cnmf {

void canonicalize_signs(DenseMatrix& q, DenseMatrix& r) {
  const Index k = std::min(r.rows(), r.cols());
  for (Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) {
      r.row(j) *= -1.0;
      q.col(j) *= -1.0;
    }
  }
}

QrFactors thin_qr(const ConstMatrixRef& a) {
  const Index k = std::min(a.rows(), a.cols());
  Eigen::HouseholderQR<DenseMatrix> qr(a);
  QrFactors out;
  out.q = DenseMatrix::Identity(a.rows(), k);
  out.q.applyOnTheLeft(qr.householderQ());
  out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  canonicalize_signs(out.q, out.r);
  return out;
}

// ---------------------------------------------------------------------------

struct TsqrAccumulator::Impl {
  Index rows;
  Index cols;
  Resources res;
  bool spill;
  Index output_block_rows;

  Index rows_seen = 0;
  Index stacked_rows = 0;
  std::vector<std::pair<Index, Index>> block_shapes;  // (rows_i, k_i)
  std::vector<DenseMatrix> q1_blocks;                 // when not spilling
  std::vector<DenseMatrix> r_blocks;
  std::filesystem::path scratch;
  std::ofstream scratch_out;

  ~Impl() {
    if (!scratch.empty()) {
      scratch_out.close();
      std::error_code ec;
      std::filesystem::remove(scratch, ec);
    }
  }
};

TsqrAccumulator::TsqrAccumulator(Index rows, Index cols, const Resources& res, bool spill, Index output_block_rows)
    : impl_(std::make_unique<Impl>()) {
  if (rows < 1 || cols < 1) throw ArgumentError("tsqr: empty matrix");
  if (rows < cols) {
    throw ArgumentError("tsqr: matrix must have at least as many rows as columns (" + std::to_string(rows) + "x" +
                        std::to_string(cols) + ")");
  }
  impl_->rows = rows;
  impl_->cols = cols;
  impl_->res = res;
  impl_->spill = spill;
  impl_->output_block_rows = std::max<Index>(output_block_rows, 1);
  if (spill) {
    impl_->scratch = scratch_path(res, "tsqr-q1");
    impl_->scratch_out.open(impl_->scratch, std::ios::binary | std::ios::trunc);
    if (!impl_->scratch_out) throw Error(impl_->scratch.string() + ": cannot open scratch file");
  }
}

TsqrAccumulator::~TsqrAccumulator() = default;

void TsqrAccumulator::add_block(const ConstMatrixRef& block) {
  Impl& s = *impl_;
  if (block.cols() != s.cols) throw ArgumentError("tsqr: block has the wrong column count");
  if (s.rows_seen + block.rows() > s.rows) throw ArgumentError("tsqr: more rows than declared");
  require_finite(block, "tsqr input block starting at row " + std::to_string(s.rows_seen));
  QrFactors f = thin_qr(block);
  const Index k = f.r.rows();
  s.stacked_rows += k;
  if (matrix_bytes(s.stacked_rows, s.cols) > s.res.memory_budget_bytes) {
    throw BudgetError("tsqr: stacked R factors need " + std::to_string(matrix_bytes(s.stacked_rows, s.cols)) +
                      " bytes, over the memory budget; use larger row blocks");
  }
  s.block_shapes.emplace_back(block.rows(), k);
  if (s.spill) {
    s.scratch_out.write(reinterpret_cast<const char*>(f.q.data()),
                        static_cast<std::streamsize>(matrix_bytes(f.q.rows(), f.q.cols())));
    if (!s.scratch_out) throw Error(s.scratch.string() + ": scratch write failed");
  } else {
    s.q1_blocks.push_back(std::move(f.q));
  }
  s.r_blocks.push_back(std::move(f.r));
  s.rows_seen += block.rows();
}

TsqrResult TsqrAccumulator::finish() {
  Impl& s = *impl_;
  if (s.rows_seen != s.rows) {
    throw ArgumentError("tsqr: received " + std::to_string(s.rows_seen) + " rows, expected " + std::to_string(s.rows));
  }
  if (s.stacked_rows < s.cols) throw ArgumentError("tsqr: stacked R factors are shorter than wide");

  DenseMatrix stacked(s.stacked_rows, s.cols);
  Index offset = 0;
  for (const DenseMatrix& r : s.r_blocks) {
    stacked.middleRows(offset, r.rows()) = r;
    offset += r.rows();
  }
  s.r_blocks.clear();
  // The only centralized step.
  QrFactors central = thin_qr(stacked);

  std::ifstream scratch_in;
  if (s.spill) {
    s.scratch_out.close();
    scratch_in.open(s.scratch, std::ios::binary);
    if (!scratch_in) throw Error(s.scratch.string() + ": cannot reopen scratch file");
  }
  StoreBuilder out(s.rows, s.cols, s.res, s.res.memory_budget_bytes / 2, s.output_block_rows);
  DenseMatrix q1;
  DenseMatrix qi;
  offset = 0;
  for (std::size_t b = 0; b < s.block_shapes.size(); ++b) {
    const auto [rows_i, k_i] = s.block_shapes[b];
    if (s.spill) {
      q1.resize(rows_i, k_i);
      scratch_in.read(reinterpret_cast<char*>(q1.data()), static_cast<std::streamsize>(matrix_bytes(rows_i, k_i)));
      if (!scratch_in) throw Error(s.scratch.string() + ": scratch read failed");
    } else {
      q1 = std::move(s.q1_blocks[b]);
    }
    qi.noalias() = q1 * central.q.middleRows(offset, k_i);
    out.append(qi);
    offset += k_i;
  }
  s.q1_blocks.clear();
  return TsqrResult{out.finish(), std::move(central.r)};
}

// ---------------------------------------------------------------------------

TsqrResult tsqr(const MatrixStore& a, const Resources& res) {
  if (a.cols() > a.block_rows()) {
    throw ArgumentError("tsqr: block of " + std::to_string(a.block_rows()) + " rows is narrower than the " +
                        std::to_string(a.cols()) + " columns");
  }
  TsqrAccumulator acc(a.rows(), a.cols(), res, a.file_backed(), a.block_rows());
  a.for_each_block([&](Index, const ConstMatrixRef& block) { acc.add_block(block); });
  return acc.finish();
}

namespace {

void require_fits(Index rows, Index cols, const Resources& res, const char* what) {
  if (matrix_bytes(rows, cols) > res.memory_budget_bytes) {
    throw BudgetError(std::string(what) + " (" + std::to_string(rows) + "x" + std::to_string(cols) +
                      ") does not fit in the memory budget");
  }
}

// Orthonormal basis of a skinny store, preserving its residency.
MatrixStore orthonormalize(const MatrixStore& b, const Resources& res) {
  if (!b.file_backed()) return MatrixStore::in_core(thin_qr(b.dense()).q, b.block_rows());
  return tsqr(b.with_block_rows(std::max(b.block_rows(), b.cols())), res).q;
}

}  // namespace

CompressionBasis tsqr_compress(const MatrixStore& a, const CompressionConfig& cfg, const Resources& res) {
  validate_config(cfg, a.rows(), a.cols());
  const Index s = cfg.sketch_size();
  const Index block_rows = std::max(a.block_rows(), s);
  const MatrixStore blocks = a.block_rows() == block_rows ? a : a.with_block_rows(block_rows);
  Rng rng(cfg.seed);
  const DenseMatrix omega = gaussian_matrix(a.cols(), s, rng);

  TsqrAccumulator acc(a.rows(), s, res, a.file_backed(), block_rows);
  if (cfg.power == 0) {
    DenseMatrix bi;
    blocks.for_each_block([&](Index r0, const ConstMatrixRef& block) {
      bi.noalias() = block * omega;
      require_finite(bi, "compression pass 1 (A Omega) at row " + std::to_string(r0));
      acc.add_block(bi);
    });
  } else {
    require_fits(a.cols(), s, res, "power-iteration intermediate A^T B");
    MatrixStore b = matmul_blocked(blocks, omega, res);
    for (int i = 0; i < cfg.power; ++i) {
      DenseMatrix y = transpose_times(blocks, b);
      if (cfg.reorthogonalize) y = thin_qr(y).q;
      require_finite(y, "compression pass " + std::to_string(2 * i + 2) + " (A^T B)");
      const std::string pass = "compression pass " + std::to_string(2 * i + 3) + " (A B)";
      if (i + 1 == cfg.power) {
        DenseMatrix bi;
        blocks.for_each_block([&](Index r0, const ConstMatrixRef& block) {
          bi.noalias() = block * y;
          require_finite(bi, pass + " at row " + std::to_string(r0));
          acc.add_block(bi);
        });
      } else {
        b = matmul_blocked(blocks, y, res);
        b.for_each_block([&](Index, const ConstMatrixRef& block) { require_finite(block, pass); });
        if (cfg.reorthogonalize) b = orthonormalize(b, res);
      }
    }
  }
  TsqrResult qr = acc.finish();
  return CompressionBasis{a.block_rows() == block_rows ? qr.q : qr.q.with_block_rows(a.block_rows()),
                          BasisKind::structured, cfg};
}

CompressionBasis tsqr_compress_transpose(const MatrixStore& a, const CompressionConfig& cfg, const Resources& res) {
  validate_config(cfg, a.rows(), a.cols());
  const Index s = cfg.sketch_size();
  require_fits(a.cols(), s, res, "transposed sketch");
  Rng rng(cfg.seed);
  // Ω is m x s; its rows are drawn block by block in row order, which is the
  // same stream a single m x s draw would consume.
  DenseMatrix y = DenseMatrix::Zero(a.cols(), s);
  a.for_each_block([&](Index, const ConstMatrixRef& block) {
    const DenseMatrix omega_i = gaussian_matrix(block.rows(), s, rng);
    y.noalias() += block.transpose() * omega_i;
  });
  require_finite(y, "compression pass 1 (A^T Omega)");
  for (int i = 0; i < cfg.power; ++i) {
    MatrixStore t = matmul_blocked(a, y, res);
    t.for_each_block([&](Index, const ConstMatrixRef& block) {
      require_finite(block, "compression pass " + std::to_string(2 * i + 2) + " (A B)");
    });
    if (cfg.reorthogonalize) t = orthonormalize(t, res);
    y = transpose_times(a, t);
    if (cfg.reorthogonalize && i + 1 < cfg.power) y = thin_qr(y).q;
    require_finite(y, "compression pass " + std::to_string(2 * i + 3) + " (A^T B)");
  }
  QrFactors qr = thin_qr(y);
  return CompressionBasis{MatrixStore::in_core(std::move(qr.q), default_block_rows(s, res)), BasisKind::structured,
                          cfg};
}

}  // namespace cnmf
