#include "cnmf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cnmf/compress.hpp"
#include "cnmf/nmf.hpp"
#include "cnmf/rng.hpp"
#include "cnmf/snmf.hpp"

namespace cnmf {

const char* const kReportHeader = "variant,m,n,r,delta,seed,time_s,rel_error,iterations";

namespace {

using json = nlohmann::json;

void check_spec(const SyntheticSpec& s) {
  if (s.m < 1 || s.n < 1 || s.r < 1) throw ArgumentError("synthetic: m, n, r must be >= 1");
  if (s.r > std::min(s.m, s.n)) throw InfeasibleRankError("synthetic: r exceeds min(m, n)");
  if (!(s.delta > 0.0 && s.delta <= 1.0)) throw ArgumentError("synthetic: delta must lie in (0, 1]");
}

DenseMatrix sparse_uniform(Index rows, Index cols, double delta, Rng& rng) {
  DenseMatrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out(i, j) = rng.uniform() < delta ? rng.uniform() : 0.0;
  }
  return out;
}

MatrixStore product_store(const SyntheticSpec& spec, const SyntheticFactors& f, const Resources& res, bool noisy) {
  const Index block_rows = default_block_rows(spec.n, res);
  StoreBuilder out(spec.m, spec.n, res, res.memory_budget_bytes / 2, block_rows);
  Rng noise(derive_seed(spec.seed, 12));
  const double noise_p = spec.delta * spec.delta;
  DenseMatrix block;
  for (Index r0 = 0; r0 < spec.m; r0 += block_rows) {
    const Index rows = std::min(block_rows, spec.m - r0);
    block.noalias() = f.x.middleRows(r0, rows) * f.y;
    if (noisy) {
      for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < spec.n; ++j) {
          if (noise.uniform() < noise_p) block(i, j) += noise.normal();
        }
      }
    }
    out.append(block);
  }
  return out.finish();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// Suite description

enum class GeneratorKind { nmf_noisy, snmf_gaussian, separable };

struct Generator {
  GeneratorKind kind = GeneratorKind::nmf_noisy;
  double delta = 1.0;
  double noise = 0.0;
};

struct Size {
  Index m, n, r;
};

struct Variant {
  std::string name;
  std::string algorithm;  // nmf | admm | snmf
  json config;
};

struct Suite {
  std::uint64_t seed = 0;
  int repeats = 10;
  Generator generator;
  std::vector<Size> sizes;
  std::vector<Variant> variants;
  json source;
};

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Suite parse_suite(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open suite file");
  Suite s;
  try {
    s.source = json::parse(in);
    const json& j = s.source;
    s.seed = get_or<std::uint64_t>(j, "seed", 0);
    s.repeats = get_or<int>(j, "repeats", 10);
    if (s.repeats < 1) throw ParseError("repeats must be >= 1");
    if (j.contains("generator")) {
      const json& g = j.at("generator");
      const std::string kind = get_or<std::string>(g, "kind", "nmf_noisy");
      if (kind == "nmf_noisy") {
        s.generator.kind = GeneratorKind::nmf_noisy;
      } else if (kind == "snmf_gaussian") {
        s.generator.kind = GeneratorKind::snmf_gaussian;
      } else if (kind == "separable") {
        s.generator.kind = GeneratorKind::separable;
      } else {
        throw ParseError("unknown generator kind '" + kind + "'");
      }
      s.generator.delta = get_or<double>(g, "delta", 1.0);
      s.generator.noise = get_or<double>(g, "noise", 0.0);
    }
    for (const json& z : get_or<json>(j, "sizes", json::array())) {
      s.sizes.push_back(Size{z.at("m").get<Index>(), z.at("n").get<Index>(), z.at("r").get<Index>()});
    }
    for (const json& v : get_or<json>(j, "variants", json::array())) {
      Variant var{v.at("name").get<std::string>(), v.at("algorithm").get<std::string>(), v};
      if (var.algorithm != "nmf" && var.algorithm != "admm" && var.algorithm != "snmf") {
        throw ParseError("variant '" + var.name + "': unknown algorithm '" + var.algorithm + "'");
      }
      s.variants.push_back(std::move(var));
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return s;
}

MatrixStore generate(const Generator& g, const Size& z, std::uint64_t seed, const Resources& res) {
  switch (g.kind) {
    case GeneratorKind::nmf_noisy:
      return gen_nmf_synthetic({z.m, z.n, z.r, g.delta, SyntheticKind::nmf_noisy, seed}, res);
    case GeneratorKind::snmf_gaussian:
      return gen_snmf_synthetic({z.m, z.n, z.r, 1.0, SyntheticKind::snmf_gaussian, seed}, res);
    case GeneratorKind::separable:
      return gen_separable_synthetic(z.m, z.n, z.r, g.noise, seed).a;
  }
  throw ArgumentError("unknown generator");
}

Compression parse_compression(const std::string& s) {
  if (s == "none") return Compression::none;
  if (s == "gaussian") return Compression::gaussian;
  if (s == "structured") return Compression::structured;
  throw ParseError("unknown compression '" + s + "'");
}

CompressionConfig variant_config(const json& v, Index rank, std::uint64_t seed, int default_power) {
  CompressionConfig cfg;
  cfg.rank = rank;
  cfg.seed = seed;
  cfg.oversample = get_or<Index>(v, "oversample", 10);
  cfg.power = get_or<int>(v, "power", default_power);
  return cfg;
}

// Runs one variant on one matrix; returns (rel_error, iterations) and fills
// the elapsed time.
std::pair<double, int> run_variant(const Variant& var, const MatrixStore& a, Index rank, std::uint64_t seed,
                                   const Resources& res, double& elapsed) {
  const json& v = var.config;
  const auto start = std::chrono::steady_clock::now();
  std::pair<double, int> out;
  if (var.algorithm == "nmf") {
    NmfOptions o;
    o.compression = parse_compression(get_or<std::string>(v, "compression", "structured"));
    const std::string method = get_or<std::string>(v, "method", "mu");
    if (method != "mu" && method != "activeset") throw ParseError("unknown method '" + method + "'");
    o.method = method == "mu" ? NmfMethod::mu : NmfMethod::activeset;
    o.config = variant_config(v, rank, seed, 4);
    if (o.compression != Compression::none) o.config = adjust_config(o.config, a.rows(), a.cols());
    o.max_iter = get_or<int>(v, "max_iter", 500);
    o.tol = get_or<double>(v, "tol", 1e-5);
    o.seed = seed;
    o.resources = res;
    const FactorPair f = nmf_alternating(a, o);
    out = {f.relative_error, f.iterations};
  } else if (var.algorithm == "admm") {
    AdmmOptions o;
    o.compressed = get_or<bool>(v, "compressed", true);
    o.config = variant_config(v, rank, seed, 4);
    if (o.compressed) o.config = adjust_config(o.config, a.rows(), a.cols());
    o.max_iter = get_or<int>(v, "max_iter", 500);
    o.tol = get_or<double>(v, "tol", 1e-4);
    o.seed = seed;
    o.resources = res;
    const FactorPair f = nmf_admm(a, o);
    out = {f.relative_error, f.iterations};
  } else {
    SnmfOptions o;
    o.rank = rank;
    const std::string sel = get_or<std::string>(v, "selector", "spa");
    if (sel != "spa" && sel != "xray") throw ParseError("unknown selector '" + sel + "'");
    o.selector = sel == "spa" ? Selector::spa : Selector::xray;
    const std::string red = get_or<std::string>(v, "reduction", "compressed");
    if (red != "qr" && red != "compressed") throw ParseError("unknown reduction '" + red + "'");
    o.reduction = red == "qr" ? Reduction::qr : Reduction::compressed;
    o.config = variant_config(v, rank, seed, 0);
    o.resources = res;
    const SnmfResult r = snmf(a, o);
    out = {r.rel_error_full, 0};
  }
  elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::string format_row(const RunReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.variant << ',' << r.m << ',' << r.n << ',' << r.r << ',' << r.delta << ',' << r.seed << ',';
  if (r.failed) {
    os << "nan,nan,-1";
  } else {
    os << r.time_s << ',' << r.rel_error << ',' << r.iterations;
  }
  return os.str();
}

void write_csv(const std::filesystem::path& path, const std::vector<RunReport>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot write");
  out << kReportHeader << '\n';
  for (const RunReport& r : rows) out << format_row(r) << '\n';
}

// All variants for one (size, repeat) cell, sharing one generated matrix.
std::vector<RunReport> run_cell(const Suite& suite, const Size& z, int repeat, const Resources& res) {
  const std::uint64_t seed = derive_seed(suite.seed, static_cast<std::uint64_t>(repeat));
  std::vector<RunReport> rows;
  MatrixStore a;
  std::string gen_failure;
  try {
    a = generate(suite.generator, z, derive_seed(seed, 0), res);
  } catch (const std::exception& e) {
    gen_failure = std::string("generator: ") + e.what();
  }
  for (const Variant& var : suite.variants) {
    RunReport r;
    r.variant = var.name;
    r.m = z.m;
    r.n = z.n;
    r.r = z.r;
    r.delta = suite.generator.delta;
    r.seed = seed;
    if (!gen_failure.empty()) {
      r.failed = true;
      r.failure = gen_failure;
    } else {
      try {
        const auto [err, iters] = run_variant(var, a, z.r, seed, res, r.time_s);
        r.rel_error = err;
        r.iterations = iters;
      } catch (const std::exception& e) {
        r.failed = true;
        r.failure = e.what();
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------

SyntheticFactors synthetic_factors(const SyntheticSpec& spec) {
  check_spec(spec);
  Rng xr(derive_seed(spec.seed, 10));
  Rng yr(derive_seed(spec.seed, 11));
  SyntheticFactors f;
  if (spec.kind == SyntheticKind::nmf_noisy) {
    f.x = sparse_uniform(spec.m, spec.r, spec.delta, xr);
    f.y = sparse_uniform(spec.r, spec.n, spec.delta, yr);
  } else {
    f.x = gaussian_matrix(spec.m, spec.r, xr);
    f.y = gaussian_matrix(spec.r, spec.n, yr);
  }
  return f;
}

MatrixStore gen_nmf_synthetic(const SyntheticSpec& spec, const Resources& res) {
  if (spec.kind != SyntheticKind::nmf_noisy) throw ArgumentError("gen_nmf_synthetic: kind must be nmf_noisy");
  return product_store(spec, synthetic_factors(spec), res, true);
}

MatrixStore gen_snmf_synthetic(const SyntheticSpec& spec, const Resources& res) {
  if (spec.kind != SyntheticKind::snmf_gaussian) {
    throw ArgumentError("gen_snmf_synthetic: kind must be snmf_gaussian");
  }
  return product_store(spec, synthetic_factors(spec), res, false);
}

SeparableData gen_separable_synthetic(Index m, Index n, Index r, double noise, std::uint64_t seed) {
  if (m < 1 || n < 1 || r < 1 || r > n) throw ArgumentError("separable: need 1 <= r <= n and m >= 1");
  if (!(noise >= 0.0)) throw ArgumentError("separable: noise must be >= 0");
  Rng rng(seed);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.uniform() * static_cast<double>(i + 1));
    std::swap(perm[i], perm[std::min(j, i)]);
  }
  SeparableData d;
  d.k.assign(perm.begin(), perm.begin() + r);
  std::sort(d.k.begin(), d.k.end());

  Rng wr = rng.child(1);
  Rng hr = rng.child(2);
  Rng nr = rng.child(3);
  d.w = uniform_matrix(m, r, wr);
  d.h = DenseMatrix::Zero(r, n);
  std::vector<bool> extreme(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < r; ++i) {
    d.h(i, d.k[i]) = 1.0;
    extreme[d.k[i]] = true;
  }
  for (Index j = 0; j < n; ++j) {
    if (extreme[j]) continue;
    double total = 0.0;
    for (Index i = 0; i < r; ++i) total += (d.h(i, j) = hr.uniform() + 1e-3);
    d.h.col(j) /= total;
  }
  DenseMatrix a = d.w * d.h;
  if (noise > 0.0) a += noise * gaussian_matrix(m, n, nr);
  d.a = MatrixStore::in_core(std::move(a));
  return d;
}

std::pair<DenseMatrix, DenseMatrix> threshold_factors(DenseMatrix x, DenseMatrix y, Index top) {
  if ((x.array() < 0.0).any() || (y.array() < 0.0).any()) throw ArgumentError("threshold: factors must be >= 0");
  if (top < 1) throw ArgumentError("threshold: top must be >= 1");
  auto cut = [](auto&& v) {
    const double mu = v.mean();
    const double sd = std::sqrt((v.array() - mu).square().mean());
    const double t = mu + 3.0 * sd;
    for (Index i = 0; i < v.size(); ++i) {
      if (v(i) < t) v(i) = 0.0;
    }
  };
  for (Index j = 0; j < x.cols(); ++j) cut(x.col(j));
  for (Index i = 0; i < y.rows(); ++i) cut(y.row(i));
  for (Index j = 0; j < x.cols(); ++j) {
    std::vector<Index> nz;
    for (Index i = 0; i < x.rows(); ++i) {
      if (x(i, j) != 0.0) nz.push_back(i);
    }
    if (static_cast<Index>(nz.size()) <= top) continue;
    // Largest first; equal values keep the lower row.
    std::stable_sort(nz.begin(), nz.end(), [&](Index p, Index q) { return x(p, j) > x(q, j); });
    for (std::size_t t = static_cast<std::size_t>(top); t < nz.size(); ++t) x(nz[t], j) = 0.0;
  }
  return {std::move(x), std::move(y)};
}

BenchmarkSummary run_benchmark(const std::filesystem::path& suite_path, const std::filesystem::path& out_dir,
                               const BenchmarkOptions& opts) {
  const Suite suite = parse_suite(suite_path);
  std::filesystem::create_directories(out_dir);

  struct Cell {
    std::size_t size;
    int repeat;
  };
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < suite.sizes.size(); ++s) {
    for (int rep = 0; rep < suite.repeats; ++rep) cells.push_back({s, rep});
  }
  std::vector<std::vector<RunReport>> results(cells.size());
  if (opts.parallel) {
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t base = 0; base < cells.size(); base += workers) {
      std::vector<std::future<std::vector<RunReport>>> batch;
      for (std::size_t c = base; c < std::min(cells.size(), base + workers); ++c) {
        batch.push_back(std::async(std::launch::async, [&, c] {
          return run_cell(suite, suite.sizes[cells[c].size], cells[c].repeat, opts.resources);
        }));
      }
      for (std::size_t c = 0; c < batch.size(); ++c) results[base + c] = batch[c].get();
    }
  } else {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      results[c] = run_cell(suite, suite.sizes[cells[c].size], cells[c].repeat, opts.resources);
    }
  }

  BenchmarkSummary out;
  for (auto& rows : results) {
    for (RunReport& r : rows) out.raw.push_back(std::move(r));
  }
  for (const Size& z : suite.sizes) {
    for (const Variant& var : suite.variants) {
      RunReport s;
      s.variant = var.name;
      s.m = z.m;
      s.n = z.n;
      s.r = z.r;
      s.delta = suite.generator.delta;
      s.seed = suite.seed;
      std::vector<double> times;
      std::vector<double> errors;
      std::vector<double> iters;
      for (const RunReport& r : out.raw) {
        if (r.variant != var.name || r.m != z.m || r.n != z.n || r.r != z.r || r.failed) continue;
        times.push_back(r.time_s);
        errors.push_back(r.rel_error);
        iters.push_back(r.iterations);
      }
      if (times.empty()) {
        s.failed = true;
      } else {
        s.time_s = median(times);
        s.rel_error = mean(errors);
        s.iterations = static_cast<int>(std::lround(mean(iters)));
      }
      out.summary.push_back(std::move(s));
    }
  }

  write_csv(out_dir / "raw.csv", out.raw);
  write_csv(out_dir / "summary.csv", out.summary);

  json manifest;
  manifest["suite"] = suite.source;
  manifest["suite_file"] = suite_path.string();
  manifest["parallel"] = opts.parallel;
  manifest["memory_budget_bytes"] = opts.resources.memory_budget_bytes;
  json runs = json::array();
  for (const RunReport& r : out.raw) {
    json row = {{"variant", r.variant}, {"m", r.m}, {"n", r.n}, {"r", r.r}, {"seed", r.seed}, {"failed", r.failed}};
    if (r.failed) row["error"] = r.failure;
    runs.push_back(std::move(row));
  }
  manifest["runs"] = std::move(runs);
  std::ofstream mf(out_dir / "manifest.json");
  if (!mf) throw Error((out_dir / "manifest.json").string() + ": cannot write");
  mf << manifest.dump(2) << '\n';
  return out;
}

}  // namespace cnmf
