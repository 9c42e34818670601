#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "cnmf/matrix.hpp"

namespace cnmf {

/// Memory budget and scratch location for out-of-core work.
///
/// The budget defaults to 1024 MiB and is overridden by the CNMF_MEM_BUDGET_MB
/// environment variable. Scratch files go to `scratch_dir`, which defaults to
/// the system temporary directory.
struct Resources {
  std::size_t memory_budget_bytes = std::size_t{1024} << 20;
  std::filesystem::path scratch_dir;

  static Resources from_env();
  static Resources with_budget_mb(double mb);

  std::filesystem::path scratch() const;
};

inline constexpr std::size_t kMaxBlockBytes = std::size_t{64} << 20;

/// Rows per block so one block of `cols` doubles stays within
/// min(64 MiB, budget / 4). Never less than `min_rows`.
Index default_block_rows(Index cols, const Resources& res, Index min_rows = 1);

/// Bytes needed to hold a rows x cols matrix of doubles.
inline std::size_t matrix_bytes(Index rows, Index cols) {
  return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * sizeof(double);
}

namespace detail {
// A binary matrix file; removes itself on destruction when owned.
struct BackingFile {
  std::filesystem::path path;
  bool owned = false;
  ~BackingFile();
};
}  // namespace detail

/// A matrix readable in row blocks, held in memory or in a binary file.
///
/// Immutable after construction; copies share the underlying data. Block
/// iteration always visits blocks 0..num_blocks()-1 in order and the last
/// block may be short.
class MatrixStore {
 public:
  MatrixStore() = default;

  static MatrixStore in_core(DenseMatrix data, Index block_rows = 0);
  /// Opens a binary file without loading it. The file is scanned once to
  /// validate its size and reject non-finite entries.
  static MatrixStore open_file(const std::filesystem::path& path, Index block_rows = 0,
                               bool owned = false);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index block_rows() const { return block_rows_; }
  Index num_blocks() const;
  Index block_begin(Index block) const { return block * block_rows_; }
  Index block_size(Index block) const;
  bool file_backed() const { return file_ != nullptr; }
  const std::filesystem::path& path() const;

  /// Same data, different block partition.
  MatrixStore with_block_rows(Index block_rows) const;

  DenseMatrix read_rows(Index row0, Index count) const;
  DenseMatrix read_block(Index block) const { return read_rows(block_begin(block), block_size(block)); }

  /// Calls f(row0, block) for every block in order. In-core blocks are views;
  /// file-backed blocks are read into one reused buffer.
  template <class F>
  void for_each_block(F&& f) const;

  /// In-core data; throws ArgumentError for a file-backed store.
  const DenseMatrix& dense() const;
  /// Materializes the whole matrix.
  DenseMatrix to_dense() const;

 private:
  void read_rows_into(Index row0, Index count, std::ifstream& in, DenseMatrix& buffer) const;
  std::ifstream open_stream() const;

  Index rows_ = 0;
  Index cols_ = 0;
  Index block_rows_ = 1;
  std::shared_ptr<const DenseMatrix> data_;
  std::shared_ptr<const detail::BackingFile> file_;
};

template <class F>
void MatrixStore::for_each_block(F&& f) const {
  const Index nb = num_blocks();
  if (data_) {
    for (Index b = 0; b < nb; ++b) {
      const Index r0 = block_begin(b);
      f(r0, ConstMatrixRef(data_->middleRows(r0, block_size(b))));
    }
    return;
  }
  std::ifstream in = open_stream();
  DenseMatrix buffer;
  for (Index b = 0; b < nb; ++b) {
    const Index r0 = block_begin(b);
    read_rows_into(r0, block_size(b), in, buffer);
    f(r0, ConstMatrixRef(buffer));
  }
}

/// Streams rows into a binary matrix file ("CNMF1" + u64 rows + u64 cols,
/// row-major little-endian doubles). The header is fixed at open; finish()
/// checks that exactly `rows` rows arrived.
class MatrixFileWriter {
 public:
  MatrixFileWriter(const std::filesystem::path& path, Index rows, Index cols);
  void append(const ConstMatrixRef& rows);
  void finish();
  Index rows_written() const { return written_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  Index rows_;
  Index cols_;
  Index written_ = 0;
};

/// Collects rows and keeps them in memory when the total fits in `limit`
/// bytes, otherwise streams them to an owned scratch file.
class StoreBuilder {
 public:
  StoreBuilder(Index rows, Index cols, const Resources& res, std::size_t limit, Index block_rows);
  void append(const ConstMatrixRef& rows);
  MatrixStore finish();

 private:
  Index rows_;
  Index cols_;
  Index block_rows_;
  Index next_ = 0;
  DenseMatrix data_;
  std::filesystem::path path_;
  std::unique_ptr<MatrixFileWriter> writer_;
};

/// Unique path inside the scratch directory.
std::filesystem::path scratch_path(const Resources& res, const std::string& stem);

enum class MatrixFormat { binary, csv };

/// Picks the format from the extension: ".csv" is CSV, everything else binary.
MatrixFormat format_for_path(const std::filesystem::path& path);

struct LoadOptions {
  Resources resources = Resources::from_env();
  Index block_rows = 0;
  bool force_out_of_core = false;
};

/// Reads a matrix. A binary file stays on disk when it is larger than the
/// memory budget (or when forced); CSV is parsed into memory.
MatrixStore load_matrix(const std::filesystem::path& path, MatrixFormat format,
                        const LoadOptions& opts = {});

void save_binary(const ConstMatrixRef& m, const std::filesystem::path& path);
void save_csv(const ConstMatrixRef& m, const std::filesystem::path& path);
/// Copies a store to a binary file block by block.
void save_binary(const MatrixStore& m, const std::filesystem::path& path);

/// A * B computed one row block of A at a time. The result is file-backed
/// when rows(A) x cols(B) exceeds the memory budget.
MatrixStore matmul_blocked(const MatrixStore& a, const ConstMatrixRef& b,
                           const Resources& res = Resources::from_env());

/// Aᵀ B where B is m x k with rows aligned to A's rows, accumulated blockwise.
DenseMatrix transpose_times(const MatrixStore& a, const MatrixStore& b);
DenseMatrix transpose_times(const MatrixStore& a, const ConstMatrixRef& b);

/// Squared Frobenius norm in one pass.
double squared_norm(const MatrixStore& a);

}  // namespace cnmf
