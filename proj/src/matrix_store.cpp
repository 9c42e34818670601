#include "cnmf/matrix_store.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <random>
#include <sstream>
#include <vector>

namespace cnmf {
namespace {

constexpr char kMagic[5] = {'C', 'N', 'M', 'F', '1'};
constexpr std::size_t kHeaderBytes = sizeof(kMagic) + 2 * sizeof(std::uint64_t);

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint64_t byteswap64(std::uint64_t v) {
  v = ((v & 0x00ff00ff00ff00ffULL) << 8) | ((v >> 8) & 0x00ff00ff00ff00ffULL);
  v = ((v & 0x0000ffff0000ffffULL) << 16) | ((v >> 16) & 0x0000ffff0000ffffULL);
  return (v << 32) | (v >> 32);
}

// The on-disk format is little-endian; swap in place on big-endian hosts.
void to_host_order(double* p, std::size_t n) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t u;
      std::memcpy(&u, p + i, 8);
      u = byteswap64(u);
      std::memcpy(p + i, &u, 8);
    }
  } else {
    (void)p;
    (void)n;
  }
}

std::uint64_t u64_to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return byteswap64(v);
  return v;
}

struct Header {
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

Header read_header(std::ifstream& in, const std::filesystem::path& path, std::uintmax_t file_size) {
  if (file_size < kHeaderBytes) {
    throw ParseError(path.string() + ": malformed header at byte 0 (file holds " +
                     std::to_string(file_size) + " bytes, header needs " +
                     std::to_string(kHeaderBytes) + ")");
  }
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path.string() + ": malformed header at byte 0 (bad magic, expected CNMF1)");
  }
  Header h;
  in.read(reinterpret_cast<char*>(&h.rows), 8);
  in.read(reinterpret_cast<char*>(&h.cols), 8);
  h.rows = u64_to_le(h.rows);
  h.cols = u64_to_le(h.cols);
  if (!in) throw ParseError(path.string() + ": malformed header at byte 5");
  if (h.rows == 0 || h.cols == 0) {
    throw ParseError(path.string() + ": malformed header at byte 5 (zero dimension)");
  }
  const std::uintmax_t payload = file_size - kHeaderBytes;
  if (payload % sizeof(double) != 0 || payload / sizeof(double) != h.rows * h.cols) {
    std::ostringstream msg;
    msg << path.string() << ": dimension mismatch at byte " << kHeaderBytes << " (header declares "
        << h.rows << "x" << h.cols << " = " << h.rows * h.cols << " values, payload holds "
        << static_cast<double>(payload) / sizeof(double) << ")";
    throw ParseError(msg.str());
  }
  return h;
}

void write_header(std::ofstream& out, Index rows, Index cols) {
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t r = u64_to_le(static_cast<std::uint64_t>(rows));
  const std::uint64_t c = u64_to_le(static_cast<std::uint64_t>(cols));
  out.write(reinterpret_cast<const char*>(&r), 8);
  out.write(reinterpret_cast<const char*>(&c), 8);
}

void write_rows(std::ofstream& out, const ConstMatrixRef& m) {
  if constexpr (std::endian::native == std::endian::little) {
    if (m.outerStride() == m.cols()) {
      out.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(matrix_bytes(m.rows(), m.cols())));
      return;
    }
  }
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      std::uint64_t u;
      std::memcpy(&u, &v, 8);
      u = u64_to_le(u);
      out.write(reinterpret_cast<const char*>(&u), 8);
    }
  }
}

// Scans a binary payload block by block for NaN/Inf.
void validate_payload(const std::filesystem::path& path, const Header& h, Index block_rows) {
  std::ifstream in(path, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(kHeaderBytes));
  const auto cols = static_cast<Index>(h.cols);
  std::vector<double> buffer;
  for (Index r0 = 0; r0 < static_cast<Index>(h.rows); r0 += block_rows) {
    const Index count = std::min<Index>(block_rows, static_cast<Index>(h.rows) - r0);
    buffer.resize(static_cast<std::size_t>(count * cols));
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(double)));
    if (!in) throw ParseError(path.string() + ": short read at row " + std::to_string(r0));
    to_host_order(buffer.data(), buffer.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      if (!std::isfinite(buffer[i])) {
        const std::size_t flat = static_cast<std::size_t>(r0 * cols) + i;
        std::ostringstream msg;
        msg << path.string() << ": non-finite entry at byte " << kHeaderBytes + flat * sizeof(double)
            << " (row " << flat / static_cast<std::size_t>(cols) << ", column "
            << flat % static_cast<std::size_t>(cols) << ")";
        throw ParseError(msg.str());
      }
    }
  }
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

DenseMatrix parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    Index count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      std::string_view field =
          trim(view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(path.string() + ": cannot parse value '" + std::string(field) + "' at row " +
                         std::to_string(rows) + " (line " + std::to_string(line_no) + "), column " +
                         std::to_string(count));
      }
      if (!std::isfinite(v)) {
        throw ParseError(path.string() + ": non-finite entry at row " + std::to_string(rows) +
                         ", column " + std::to_string(count));
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols < 0) {
      cols = count;
    } else if (count != cols) {
      throw ParseError(path.string() + ": dimension mismatch at row " + std::to_string(rows) + " (" +
                       std::to_string(count) + " values, expected " + std::to_string(cols) + ")");
    }
    ++rows;
  }
  if (rows == 0) throw ParseError(path.string() + ": empty matrix file (no rows at row offset 0)");
  DenseMatrix out(rows, cols);
  std::copy(values.begin(), values.end(), out.data());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

Resources Resources::from_env() {
  Resources res;
  if (const char* env = std::getenv("CNMF_MEM_BUDGET_MB"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const double mb = std::strtod(env, &end);
    if (end == env || !(mb > 0.0)) {
      throw ArgumentError(std::string("CNMF_MEM_BUDGET_MB must be a positive number, got '") + env + "'");
    }
    res.memory_budget_bytes = static_cast<std::size_t>(mb * 1024.0 * 1024.0);
  }
  return res;
}

Resources Resources::with_budget_mb(double mb) {
  if (!(mb > 0.0)) throw ArgumentError("memory budget must be positive");
  Resources res;
  res.memory_budget_bytes = static_cast<std::size_t>(mb * 1024.0 * 1024.0);
  return res;
}

std::filesystem::path Resources::scratch() const {
  return scratch_dir.empty() ? std::filesystem::temp_directory_path() : scratch_dir;
}

Index default_block_rows(Index cols, const Resources& res, Index min_rows) {
  const std::size_t target = std::min(kMaxBlockBytes, res.memory_budget_bytes / 4);
  const std::size_t row_bytes = static_cast<std::size_t>(std::max<Index>(cols, 1)) * sizeof(double);
  const auto rows = static_cast<Index>(std::max<std::size_t>(target / row_bytes, 1));
  return std::max(rows, min_rows);
}

std::filesystem::path scratch_path(const Resources& res, const std::string& stem) {
  static std::atomic<std::uint64_t> counter{0};
  static const std::uint64_t token = [] {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }();
  const std::filesystem::path dir = res.scratch();
  std::filesystem::create_directories(dir);
  std::ostringstream name;
  name << "cnmf-" << stem << "-" << std::hex << token << "-" << std::dec << counter.fetch_add(1) << ".bin";
  return dir / name.str();
}

namespace detail {
BackingFile::~BackingFile() {
  if (owned) {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
}
}  // namespace detail

// ---------------------------------------------------------------------------

MatrixStore MatrixStore::in_core(DenseMatrix data, Index block_rows) {
  MatrixStore s;
  s.rows_ = data.rows();
  s.cols_ = data.cols();
  if (s.rows_ < 1 || s.cols_ < 1) throw ArgumentError("matrix store needs at least one row and column");
  s.block_rows_ = block_rows > 0 ? block_rows : default_block_rows(s.cols_, Resources::from_env());
  s.data_ = std::make_shared<const DenseMatrix>(std::move(data));
  return s;
}

MatrixStore MatrixStore::open_file(const std::filesystem::path& path, Index block_rows, bool owned) {
  auto file = std::make_shared<detail::BackingFile>();
  file->path = path;
  file->owned = owned;
  std::error_code ec;
  const std::uintmax_t size = std::filesystem::file_size(path, ec);
  if (ec) throw ParseError(path.string() + ": cannot open (" + ec.message() + ")");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open");
  const Header h = read_header(in, path, size);
  MatrixStore s;
  s.rows_ = static_cast<Index>(h.rows);
  s.cols_ = static_cast<Index>(h.cols);
  s.block_rows_ = block_rows > 0 ? block_rows : default_block_rows(s.cols_, Resources::from_env());
  validate_payload(path, h, s.block_rows_);
  s.file_ = std::move(file);
  return s;
}

Index MatrixStore::num_blocks() const { return rows_ == 0 ? 0 : (rows_ + block_rows_ - 1) / block_rows_; }

Index MatrixStore::block_size(Index block) const {
  return std::min(block_rows_, rows_ - block_begin(block));
}

const std::filesystem::path& MatrixStore::path() const {
  if (!file_) throw ArgumentError("in-core matrix store has no backing file");
  return file_->path;
}

MatrixStore MatrixStore::with_block_rows(Index block_rows) const {
  if (block_rows < 1) throw ArgumentError("block_rows must be >= 1");
  MatrixStore s = *this;
  s.block_rows_ = block_rows;
  return s;
}

std::ifstream MatrixStore::open_stream() const {
  std::ifstream in(file_->path, std::ios::binary);
  if (!in) throw Error(file_->path.string() + ": cannot reopen backing file");
  return in;
}

void MatrixStore::read_rows_into(Index row0, Index count, std::ifstream& in, DenseMatrix& buffer) const {
  buffer.resize(count, cols_);
  const auto offset = static_cast<std::streamoff>(kHeaderBytes + matrix_bytes(row0, cols_));
  in.seekg(offset);
  in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(matrix_bytes(count, cols_)));
  if (!in) throw Error(file_->path.string() + ": short read at row " + std::to_string(row0));
  to_host_order(buffer.data(), static_cast<std::size_t>(buffer.size()));
}

DenseMatrix MatrixStore::read_rows(Index row0, Index count) const {
  if (row0 < 0 || count < 0 || row0 + count > rows_) throw ArgumentError("row range out of bounds");
  if (data_) return data_->middleRows(row0, count);
  std::ifstream in = open_stream();
  DenseMatrix out;
  read_rows_into(row0, count, in, out);
  return out;
}

const DenseMatrix& MatrixStore::dense() const {
  if (!data_) throw ArgumentError("matrix store is file-backed; use to_dense() or block iteration");
  return *data_;
}

DenseMatrix MatrixStore::to_dense() const {
  if (data_) return *data_;
  return read_rows(0, rows_);
}

// ---------------------------------------------------------------------------

MatrixFileWriter::MatrixFileWriter(const std::filesystem::path& path, Index rows, Index cols)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), rows_(rows), cols_(cols) {
  if (!out_) throw Error(path.string() + ": cannot open for writing");
  if (rows < 1 || cols < 1) throw ArgumentError("matrix file needs at least one row and column");
  write_header(out_, rows, cols);
}

void MatrixFileWriter::append(const ConstMatrixRef& rows) {
  if (rows.cols() != cols_) throw ArgumentError("appended rows have the wrong column count");
  if (written_ + rows.rows() > rows_) throw ArgumentError("appending past the declared row count");
  write_rows(out_, rows);
  written_ += rows.rows();
}

void MatrixFileWriter::finish() {
  if (written_ != rows_) {
    throw ArgumentError(path_.string() + ": wrote " + std::to_string(written_) + " rows, header declares " +
                        std::to_string(rows_));
  }
  out_.flush();
  out_.close();
  if (!out_) throw Error(path_.string() + ": write failed");
}

StoreBuilder::StoreBuilder(Index rows, Index cols, const Resources& res, std::size_t limit, Index block_rows)
    : rows_(rows), cols_(cols), block_rows_(block_rows) {
  if (matrix_bytes(rows, cols) <= limit) {
    data_.resize(rows, cols);
  } else {
    path_ = scratch_path(res, "store");
    writer_ = std::make_unique<MatrixFileWriter>(path_, rows, cols);
  }
}

void StoreBuilder::append(const ConstMatrixRef& rows) {
  if (writer_) {
    writer_->append(rows);
  } else {
    if (next_ + rows.rows() > rows_ || rows.cols() != cols_) throw ArgumentError("store builder overflow");
    data_.middleRows(next_, rows.rows()) = rows;
  }
  next_ += rows.rows();
}

MatrixStore StoreBuilder::finish() {
  if (next_ != rows_) throw ArgumentError("store builder received too few rows");
  if (writer_) {
    writer_->finish();
    writer_.reset();
    try {
      return MatrixStore::open_file(path_, block_rows_, true);
    } catch (...) {
      std::error_code ec;
      std::filesystem::remove(path_, ec);
      throw;
    }
  }
  return MatrixStore::in_core(std::move(data_), block_rows_);
}

// ---------------------------------------------------------------------------

MatrixFormat format_for_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? MatrixFormat::csv : MatrixFormat::binary;
}

MatrixStore load_matrix(const std::filesystem::path& path, MatrixFormat format, const LoadOptions& opts) {
  if (!std::filesystem::exists(path)) throw ParseError(path.string() + ": no such file");
  if (format == MatrixFormat::csv) {
    DenseMatrix m = parse_csv(path);
    const Index block_rows = opts.block_rows > 0 ? opts.block_rows : default_block_rows(m.cols(), opts.resources);
    if (opts.force_out_of_core || matrix_bytes(m.rows(), m.cols()) > opts.resources.memory_budget_bytes) {
      const auto tmp = scratch_path(opts.resources, "csv");
      save_binary(m, tmp);
      return MatrixStore::open_file(tmp, block_rows, true);
    }
    return MatrixStore::in_core(std::move(m), block_rows);
  }
  std::error_code ec;
  const std::uintmax_t size = std::filesystem::file_size(path, ec);
  if (ec) throw ParseError(path.string() + ": cannot stat");
  Header h;
  {
    std::ifstream in(path, std::ios::binary);
    h = read_header(in, path, size);
  }
  const Index block_rows =
      opts.block_rows > 0 ? opts.block_rows : default_block_rows(static_cast<Index>(h.cols), opts.resources);
  MatrixStore store = MatrixStore::open_file(path, block_rows);
  if (opts.force_out_of_core || size - kHeaderBytes > opts.resources.memory_budget_bytes) return store;
  return MatrixStore::in_core(store.to_dense(), block_rows);
}

void save_binary(const ConstMatrixRef& m, const std::filesystem::path& path) {
  MatrixFileWriter w(path, m.rows(), m.cols());
  w.append(m);
  w.finish();
}

void save_binary(const MatrixStore& m, const std::filesystem::path& path) {
  MatrixFileWriter w(path, m.rows(), m.cols());
  m.for_each_block([&](Index, const ConstMatrixRef& block) { w.append(block); });
  w.finish();
}

void save_csv(const ConstMatrixRef& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  char buf[32];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), m(i, j));
      if (j > 0) out << ',';
      out.write(buf, end - buf);
    }
    out << '\n';
  }
  if (!out) throw Error(path.string() + ": write failed");
}

MatrixStore matmul_blocked(const MatrixStore& a, const ConstMatrixRef& b, const Resources& res) {
  if (a.cols() != b.rows()) {
    throw ArgumentError("matmul_blocked: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                        std::to_string(b.rows()) + ")");
  }
  StoreBuilder out(a.rows(), b.cols(), res, res.memory_budget_bytes, a.block_rows());
  DenseMatrix prod;
  a.for_each_block([&](Index, const ConstMatrixRef& block) {
    prod.noalias() = block * b;
    out.append(prod);
  });
  return out.finish();
}

DenseMatrix transpose_times(const MatrixStore& a, const ConstMatrixRef& b) {
  if (a.rows() != b.rows()) throw ArgumentError("transpose_times: row counts differ");
  DenseMatrix acc = DenseMatrix::Zero(a.cols(), b.cols());
  a.for_each_block([&](Index r0, const ConstMatrixRef& block) {
    acc.noalias() += block.transpose() * b.middleRows(r0, block.rows());
  });
  return acc;
}

DenseMatrix transpose_times(const MatrixStore& a, const MatrixStore& b) {
  if (a.rows() != b.rows()) throw ArgumentError("transpose_times: row counts differ");
  if (!b.file_backed()) return transpose_times(a, ConstMatrixRef(b.dense()));
  DenseMatrix acc = DenseMatrix::Zero(a.cols(), b.cols());
  a.for_each_block([&](Index r0, const ConstMatrixRef& block) {
    const DenseMatrix rhs = b.read_rows(r0, block.rows());
    acc.noalias() += block.transpose() * rhs;
  });
  return acc;
}

double squared_norm(const MatrixStore& a) {
  double total = 0.0;
  a.for_each_block([&](Index, const ConstMatrixRef& block) { total += block.squaredNorm(); });
  return total;
}

}  // namespace cnmf
