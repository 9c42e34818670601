#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cnmf/bench.hpp"
#include "cnmf/compress.hpp"
#include "cnmf/nmf.hpp"
#include "cnmf/nnls.hpp"
#include "cnmf/snmf.hpp"
#include "cnmf/tsqr.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using cnmf::DenseMatrix;
using cnmf::Index;

namespace {

cnmf::MatrixStore store_of(const DenseMatrix& a) { return cnmf::MatrixStore::in_core(a); }

cnmf::CompressionConfig make_config(Index rank, Index oversample, int power, std::uint64_t seed) {
  cnmf::CompressionConfig cfg;
  cfg.rank = rank;
  cfg.oversample = oversample;
  cfg.power = power;
  cfg.seed = seed;
  return cfg;
}

template <class E>
E parse_enum(const std::string& name, std::initializer_list<std::pair<const char*, E>> table) {
  for (const auto& [key, value] : table) {
    if (name == key) return value;
  }
  throw cnmf::ArgumentError("unknown option '" + name + "'");
}

py::dict factor_dict(const cnmf::FactorPair& f) {
  return py::dict("x"_a = f.x, "y"_a = f.y, "iterations"_a = f.iterations,
                  "objective_trace"_a = f.objective_trace, "relative_error"_a = f.relative_error,
                  "converged"_a = f.converged);
}

}  // namespace

PYBIND11_MODULE(_cnmf, m) {
  m.doc() = "Randomized compression for nonnegative matrix factorization";

  static py::exception<cnmf::Error> base(m, "CnmfError", PyExc_RuntimeError);
  py::register_exception<cnmf::ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<cnmf::DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<cnmf::RankDeficiencyError>(m, "RankDeficiencyError", base.ptr());
  py::register_exception<cnmf::NumericError>(m, "NumericError", base.ptr());
  py::register_exception<cnmf::BudgetError>(m, "BudgetError", base.ptr());
  py::register_exception<cnmf::UndefinedMetricError>(m, "UndefinedMetricError", base.ptr());
  py::register_exception<cnmf::ParseError>(m, "ParseError", base.ptr());
  py::register_exception<cnmf::ArgumentError>(m, "ArgumentError", PyExc_ValueError);

  m.def("load", [](const std::filesystem::path& path) {
    return cnmf::load_matrix(path, cnmf::format_for_path(path)).to_dense();
  }, "path"_a, "Reads a .cnmf binary or CSV matrix.");

  m.def("save", [](const DenseMatrix& a, const std::filesystem::path& path) {
    if (cnmf::format_for_path(path) == cnmf::MatrixFormat::csv) {
      cnmf::save_csv(a, path);
    } else {
      cnmf::save_binary(a, path);
    }
  }, "a"_a, "path"_a);

  m.def("adjust_config", [](Index rank, Index oversample, int power, Index rows, Index cols) {
    const auto c = cnmf::adjust_config(make_config(rank, oversample, power, 0), rows, cols);
    return py::make_tuple(c.rank, c.oversample, c.power);
  }, "rank"_a, "oversample"_a, "power"_a, "rows"_a, "cols"_a,
        "Returns (rank, oversample, power) after clamping to the matrix shape.");

  m.def("structured_basis", [](const DenseMatrix& a, Index rank, Index oversample, int power, std::uint64_t seed) {
    const auto cfg = cnmf::adjust_config(make_config(rank, oversample, power, seed), a.rows(), a.cols());
    return cnmf::structured_compress(a, cfg).q.to_dense();
  }, "a"_a, "rank"_a, "oversample"_a = 10, "power"_a = 4, "seed"_a = 0,
        "Orthonormal basis Q for the range of (AAᵀ)^w A Ω.");

  m.def("gaussian_basis", [](Index rows, Index size, std::uint64_t seed) {
    return cnmf::gaussian_compress(rows, size, seed).q.to_dense();
  }, "rows"_a, "size"_a, "seed"_a = 0);

  m.def("tsqr", [](const DenseMatrix& a, Index block_rows) {
    auto r = cnmf::tsqr(cnmf::MatrixStore::in_core(a, block_rows));
    return py::make_tuple(r.q.to_dense(), r.r);
  }, "a"_a, "block_rows"_a = 0, "Thin QR by row blocks; returns (Q, R).");

  m.def("nnls", [](const DenseMatrix& c, const DenseMatrix& d, double tol) {
    cnmf::NnlsOptions o;
    o.tol = tol;
    return cnmf::nnls_solve(c, d, o);
  }, "c"_a, "d"_a, "tol"_a = 1e-10, "argmin ||C H - D||_F subject to H >= 0, column by column.");

  m.def("nmf", [](const DenseMatrix& a, Index rank, const std::string& method, const std::string& compression,
                  Index oversample, int power, std::uint64_t seed, int max_iter, double tol) {
    cnmf::NmfOptions o;
    o.method = parse_enum<cnmf::NmfMethod>(method, {{"mu", cnmf::NmfMethod::mu},
                                                    {"activeset", cnmf::NmfMethod::activeset}});
    o.compression = parse_enum<cnmf::Compression>(compression, {{"none", cnmf::Compression::none},
                                                                {"gaussian", cnmf::Compression::gaussian},
                                                                {"structured", cnmf::Compression::structured}});
    o.config = make_config(rank, oversample, power, seed);
    if (o.compression != cnmf::Compression::none) o.config = cnmf::adjust_config(o.config, a.rows(), a.cols());
    o.max_iter = max_iter;
    o.tol = tol;
    o.seed = seed;
    cnmf::FactorPair f;
    {
      py::gil_scoped_release nogil;
      f = cnmf::nmf_alternating(store_of(a), o);
    }
    return factor_dict(f);
  }, "a"_a, "rank"_a, "method"_a = "mu", "compression"_a = "structured", "oversample"_a = 10, "power"_a = 4,
        "seed"_a = 0, "max_iter"_a = 500, "tol"_a = 1e-5);

  m.def("admm", [](const DenseMatrix& a, Index rank, bool compressed, Index oversample, int power,
                   std::uint64_t seed, int max_iter, double tol) {
    cnmf::AdmmOptions o;
    o.config = make_config(rank, oversample, power, seed);
    if (compressed) o.config = cnmf::adjust_config(o.config, a.rows(), a.cols());
    o.compressed = compressed;
    o.max_iter = max_iter;
    o.tol = tol;
    o.seed = seed;
    cnmf::FactorPair f;
    {
      py::gil_scoped_release nogil;
      f = cnmf::nmf_admm(store_of(a), o);
    }
    return factor_dict(f);
  }, "a"_a, "rank"_a, "compressed"_a = true, "oversample"_a = 10, "power"_a = 4, "seed"_a = 0,
        "max_iter"_a = 500, "tol"_a = 1e-4);

  m.def("snmf", [](const DenseMatrix& a, Index rank, const std::string& selector, const std::string& reduction,
                   Index oversample, int power, std::uint64_t seed) {
    cnmf::SnmfOptions o;
    o.rank = rank;
    o.selector = parse_enum<cnmf::Selector>(selector, {{"spa", cnmf::Selector::spa}, {"xray", cnmf::Selector::xray}});
    o.reduction = parse_enum<cnmf::Reduction>(reduction, {{"qr", cnmf::Reduction::qr},
                                                          {"compressed", cnmf::Reduction::compressed}});
    o.config = make_config(rank, oversample, power, seed);
    cnmf::SnmfResult r;
    {
      py::gil_scoped_release nogil;
      r = cnmf::snmf(store_of(a), o);
    }
    return py::dict("k"_a = r.k, "y"_a = r.y, "rel_error_reduced"_a = r.rel_error_reduced,
                    "rel_error_full"_a = r.rel_error_full, "reduced_rows"_a = r.reduced_rows);
  }, "a"_a, "rank"_a, "selector"_a = "spa", "reduction"_a = "compressed", "oversample"_a = 10, "power"_a = 0,
        "seed"_a = 0);

  m.def("select_spa", &cnmf::select_columns_spa, "r"_a, "rank"_a);
  m.def("select_xray", &cnmf::select_columns_xray, "r"_a, "rank"_a);

  m.def("relative_error", [](const DenseMatrix& a, const DenseMatrix& x, const DenseMatrix& y) {
    return cnmf::relative_error(store_of(a), x, y);
  }, "a"_a, "x"_a, "y"_a);

  m.def("gen_nmf", [](Index m_rows, Index n, Index r, double delta, std::uint64_t seed) {
    return cnmf::gen_nmf_synthetic({m_rows, n, r, delta, cnmf::SyntheticKind::nmf_noisy, seed}).to_dense();
  }, "m"_a, "n"_a, "r"_a, "delta"_a = 1.0, "seed"_a = 0, "Noisy product of sparse uniform factors.");

  m.def("gen_snmf", [](Index m_rows, Index n, Index r, double delta, std::uint64_t seed) {
    return cnmf::gen_snmf_synthetic({m_rows, n, r, delta, cnmf::SyntheticKind::snmf_gaussian, seed}).to_dense();
  }, "m"_a, "n"_a, "r"_a, "delta"_a = 1.0, "seed"_a = 0);

  m.def("gen_separable", [](Index m_rows, Index n, Index r, double noise, std::uint64_t seed) {
    auto d = cnmf::gen_separable_synthetic(m_rows, n, r, noise, seed);
    return py::dict("a"_a = d.a.to_dense(), "k"_a = d.k, "w"_a = d.w, "h"_a = d.h);
  }, "m"_a, "n"_a, "r"_a, "noise"_a = 0.0, "seed"_a = 0);

  m.def("threshold", [](const DenseMatrix& x, const DenseMatrix& y, Index top) {
    auto [tx, ty] = cnmf::threshold_factors(x, y, top);
    return py::make_tuple(tx, ty);
  }, "x"_a, "y"_a, "top"_a = 25, "Keeps entries at or above mean + 3 std, at most `top` per column of X.");

  m.def("run_benchmark", [](const std::filesystem::path& suite, const std::filesystem::path& out, bool parallel) {
    cnmf::BenchmarkOptions o;
    o.parallel = parallel;
    py::gil_scoped_release nogil;
    return cnmf::run_benchmark(suite, out, o).raw.size();
  }, "suite"_a, "out"_a, "parallel"_a = false, "Runs a suite; returns the number of raw rows.");
}
