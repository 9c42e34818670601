// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed below.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "cnmf/bench.hpp"
#include "cnmf/compress.hpp"
#include "cnmf/nmf.hpp"
#include "cnmf/nnls.hpp"
#include "cnmf/rng.hpp"
#include "cnmf/snmf.hpp"
#include "cnmf/tsqr.hpp"
#include "oracles.hpp"

using namespace cnmf;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kBoundSlack = 1.1;        // 1
constexpr double kTsqrTol = 1e-10;         // 3
constexpr double kOutOfCoreTol = 1e-8;     // 4
constexpr double kOutOfCoreSlowdown = 5.0; // 4
constexpr std::size_t kRssOverhead = std::size_t{16} << 20;  // 4
constexpr double kNnlsGap = 1e-8;          // 5
constexpr double kMuRise = 1e-12;          // 6
constexpr double kKktTol = 1e-4;           // 7
constexpr double kIdentityPathTol = 1e-10; // 7
constexpr double kParity = 0.10;           // 8
constexpr double kMuSpeedup = 2.0;         // 9
constexpr double kSnmfError = 1e-6;        // 10
constexpr double kSnmfSpeedup = 3.0;       // 11
constexpr double kReducedTol = 1e-10;      // 12

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <class... T>
std::string fmtn(const char* f, T... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double orthogonality_error(const DenseMatrix& q) {
  return (q.transpose() * q - DenseMatrix::Identity(q.cols(), q.cols())).norm();
}

// ---------------------------------------------------------------------------

Outcome compression_bound() {
  const Index m = 200, n = 100, r = 10, rov = 10;
  std::vector<std::pair<const char*, Eigen::VectorXd>> spectra;
  Eigen::VectorXd geometric(n), harmonic(n);
  for (Index j = 0; j < n; ++j) {
    geometric(j) = std::pow(0.8, static_cast<double>(j));
    harmonic(j) = 1.0 / static_cast<double>(j + 1);
  }
  spectra.emplace_back("geometric", geometric);
  spectra.emplace_back("harmonic", harmonic);
  const double factor = kBoundSlack * std::sqrt(1.0 + static_cast<double>(r) / static_cast<double>(rov - 1));
  bool ok = true;
  std::string detail;
  const auto t0 = Clock::now();
  for (const auto& [name, sigma] : spectra) {
    std::vector<double> errs;
    double tail = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
      const DenseMatrix a = oracle::with_spectrum(m, n, sigma, 100 + seed);
      tail += oracle::tail_energy(a, r) / 20.0;
      CompressionConfig cfg{r, rov, 0, static_cast<std::uint64_t>(seed)};
      errs.push_back(compression_error(a, structured_compress(a, cfg), Norm::frobenius));
    }
    const double bound = factor * tail;
    ok = ok && mean(errs) <= bound;
    detail += fmtn("%s mean=%.4g bound=%.4g; ", name, mean(errs), bound);
  }
  const double elapsed = seconds_since(t0);
  ok = ok && elapsed < 10.0;
  return {ok, detail + fmt("runtime %.2fs < 10s", elapsed)};
}

Outcome power_iteration_effect() {
  const Index m = 200, n = 100, r = 10;
  Eigen::VectorXd sigma(n);
  for (Index j = 0; j < n; ++j) sigma(j) = j < r ? 1.0 : 0.5 * std::pow(0.995, static_cast<double>(j - r));
  const auto t0 = Clock::now();
  std::vector<double> med;
  for (int w : {0, 2, 4}) {
    std::vector<double> res;
    for (int seed = 0; seed < 20; ++seed) {
      const DenseMatrix a = oracle::with_spectrum(m, n, sigma, 500 + seed);
      CompressionConfig cfg{r, 5, w, static_cast<std::uint64_t>(seed)};
      const DenseMatrix q = structured_compress(a, cfg).q.to_dense();
      const DenseMatrix resid = a - q * (q.transpose() * a);
      res.push_back(oracle::singular_values(resid)(0));
    }
    med.push_back(median(res));
  }
  const double elapsed = seconds_since(t0);
  const bool ok = med[0] > med[1] && med[1] > med[2] && elapsed < 30.0;
  return {ok, fmtn("median spectral residual w=0: %.4g, w=2: %.4g, w=4: %.4g; runtime %.2fs < 30s", med[0], med[1],
                   med[2], elapsed)};
}

Outcome tsqr_correctness() {
  const std::vector<std::pair<Index, Index>> shapes = {{1000, 10}, {2500, 30}, {5000, 50},  {10000, 20},
                                                       {20000, 50}, {33333, 7}, {50000, 40}, {64000, 50},
                                                       {80000, 25}, {100000, 50}};
  const auto t0 = Clock::now();
  double worst_orth = 0, worst_rec = 0, worst_r = 0, worst_lower = 0;
  Resources res = Resources::from_env();
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto [m, n] = shapes[i];
    Rng rng(900 + i);
    const DenseMatrix a = gaussian_matrix(m, n, rng);
    const Index block = std::max<Index>(n, m / 7 + 3);  // uneven last block
    MatrixStore store;
    fs::path file;
    if (i % 2 == 1) {
      file = scratch_path(res, "acc-tsqr");
      save_binary(a, file);
      store = MatrixStore::open_file(file, block, true);
    } else {
      store = MatrixStore::in_core(a, block);
    }
    const TsqrResult t = tsqr(store, res);
    const DenseMatrix q = t.q.to_dense();
    worst_orth = std::max(worst_orth, orthogonality_error(q));
    worst_rec = std::max(worst_rec, (q * t.r - a).norm() / a.norm());
    worst_lower = std::max(worst_lower, t.r.triangularView<Eigen::StrictlyLower>().toDenseMatrix().cwiseAbs().maxCoeff());
    const oracle::Qr ref = oracle::reference_qr(a);
    worst_r = std::max(worst_r, (t.r - ref.r).norm() / ref.r.norm());
  }
  const double elapsed = seconds_since(t0);
  const bool ok = worst_orth <= kTsqrTol && worst_rec <= kTsqrTol && worst_lower == 0.0 && worst_r <= kTsqrTol &&
                  elapsed < 60.0;
  return {ok, fmtn("max |QtQ-I|=%.2e, max rel |QR-A|=%.2e, max |tril(R)|=%.1e, max rel |R-Rref|=%.2e (tol %.0e); "
                   "runtime %.2fs < 60s",
                   worst_orth, worst_rec, worst_lower, worst_r, kTsqrTol, elapsed)};
}

// Out-of-core worker, run in a fresh process so its peak RSS reflects only
// its own allocations: compresses `file` and writes Q and the elapsed time.
int out_of_core_child(const char* file, const char* seed, const char* qfile, const char* tfile) {
  if (std::string(file) == "-") return 0;  // baseline process
  Resources res = Resources::with_budget_mb(64);
  res.scratch_dir = fs::path(qfile).parent_path();
  LoadOptions lo;
  lo.resources = res;
  const MatrixStore a = load_matrix(file, MatrixFormat::binary, lo);
  if (!a.file_backed()) return 2;
  CompressionConfig cfg{10, 10, 0, std::stoull(seed)};
  const auto t0 = Clock::now();
  const CompressionBasis b = tsqr_compress(a, cfg, res);
  const double t = seconds_since(t0);
  save_binary(b.q, qfile);
  FILE* tf = std::fopen(tfile, "w");
  if (!tf) return 3;
  std::fprintf(tf, "%.17g\n", t);
  std::fclose(tf);
  return 0;
}

// Runs this binary in child mode and returns the child's peak RSS in bytes.
std::size_t child_peak_rss(const std::vector<std::string>& args) {
  std::fflush(stdout);
  const pid_t pid = fork();
  if (pid == 0) {
    std::vector<char*> argv;
    static char self[] = "/proc/self/exe";
    static char flag[] = "--out-of-core-child";
    argv.push_back(self);
    argv.push_back(flag);
    for (const std::string& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execv(self, argv.data());
    _exit(127);
  }
  int status = 0;
  rusage ru{};
  if (wait4(pid, &status, 0, &ru) < 0 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error("out-of-core child process failed");
  }
  return static_cast<std::size_t>(ru.ru_maxrss) * 1024;
}

Outcome out_of_core_equivalence() {
  const Index m = 100000, n = 200;
  Resources res = Resources::with_budget_mb(64);
  res.scratch_dir = Resources::from_env().scratch();
  const fs::path file = scratch_path(res, "acc-ooc");
  {
    MatrixFileWriter w(file, m, n);
    Rng rng(4242);
    for (Index r0 = 0; r0 < m; r0 += 5000) {
      DenseMatrix block = uniform_matrix(5000, n, rng);
      w.append(block);
    }
    w.finish();
  }
  const std::size_t baseline = child_peak_rss({"-", "0", "-", "-"});
  double worst = 0.0;
  double ooc_time = 0.0, in_time = 0.0;
  std::size_t peak = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const fs::path qfile = scratch_path(res, "acc-ooc-q");
    const fs::path tfile = scratch_path(res, "acc-ooc-t");
    peak = std::max(peak, child_peak_rss({file.string(), std::to_string(seed), qfile.string(), tfile.string()}));
    double t = 0;
    FILE* tf = std::fopen(tfile.c_str(), "r");
    if (!tf || std::fscanf(tf, "%lf", &t) != 1) throw Error("missing child timing");
    std::fclose(tf);
    ooc_time += t;
    const DenseMatrix q_ooc = MatrixStore::open_file(qfile).to_dense();
    fs::remove(qfile);
    fs::remove(tfile);

    const DenseMatrix a = MatrixStore::open_file(file).to_dense();
    CompressionConfig cfg{10, 10, 0, seed};
    const auto t0 = Clock::now();
    const CompressionBasis in = structured_compress(a, cfg);
    in_time += seconds_since(t0);
    worst = std::max(worst, (in.q.dense() - q_ooc).norm());
  }
  fs::remove(file);
  const std::size_t used = peak > baseline ? peak - baseline : 0;
  const bool mem_ok = used <= res.memory_budget_bytes + kRssOverhead;
  const bool ok = worst <= kOutOfCoreTol && mem_ok && ooc_time <= kOutOfCoreSlowdown * in_time;
  return {ok, fmtn("max |Q_ooc - Q_in|=%.2e (tol %.0e); peak RSS above baseline %.1f MiB <= budget %.0f MiB + %.0f "
                   "MiB; time out-of-core %.2fs vs in-core %.2fs (<= %.0fx)",
                   worst, kOutOfCoreTol, used / 1048576.0, res.memory_budget_bytes / 1048576.0,
                   kRssOverhead / 1048576.0, ooc_time, in_time, kOutOfCoreSlowdown)};
}

Outcome nnls_oracle() {
  const auto t0 = Clock::now();
  Rng rng(77);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Index q = 1 + static_cast<Index>(rng.uniform() * 8);
    const Index p = q + 1 + static_cast<Index>(rng.uniform() * 10);
    const DenseMatrix c = gaussian_matrix(p, q, rng);
    const DenseMatrix d = gaussian_matrix(p, 1, rng);
    const DenseMatrix h = nnls_solve(c, d);
    if ((h.array() < 0).any()) return {false, "negative entry in solution"};
    const double got = (d - c * h).squaredNorm();
    const double want = oracle::nnls_objective(c, d.col(0));
    worst = std::max(worst, (got - want) / std::max(1.0, want));
  }
  const double elapsed = seconds_since(t0);
  return {worst <= kNnlsGap && elapsed < 60.0,
          fmtn("max objective gap vs 2^q enumeration %.2e (tol %.0e); runtime %.2fs < 60s", worst, kNnlsGap, elapsed)};
}

Outcome mu_monotone() {
  double worst = -1e300;
  for (int i = 0; i < 50; ++i) {
    Rng rng(3000 + i);
    const Index m = 20 + static_cast<Index>(rng.uniform() * 30);
    const Index n = 15 + static_cast<Index>(rng.uniform() * 30);
    const Index r = 2 + static_cast<Index>(rng.uniform() * 5);
    const DenseMatrix a = uniform_matrix(m, n, rng);
    NmfOptions o;
    o.config.rank = r;
    o.compression = Compression::none;
    o.method = NmfMethod::mu;
    o.max_iter = 200;
    o.tol = 0.0;
    o.seed = static_cast<std::uint64_t>(i);
    const FactorPair f = nmf_alternating(MatrixStore::in_core(a), o);
    for (std::size_t k = 1; k < f.objective_trace.size(); ++k) {
      const double prev = f.objective_trace[k - 1];
      worst = std::max(worst, (f.objective_trace[k] - prev) / std::max(1.0, prev));
    }
  }
  return {worst <= kMuRise, fmtn("largest per-sweep objective rise %.2e (tol %.0e, relative to max(1, f))", worst,
                                 kMuRise)};
}

Outcome admm_kkt() {
  const Index m = 100, n = 80, r = 5;
  Rng rng(555);
  const DenseMatrix a = uniform_matrix(m, r, rng) * uniform_matrix(r, n, rng);
  AdmmOptions o;
  o.config = adjust_config(nmf_compression_defaults(r, 7), m, n);
  o.max_iter = 500;
  o.tol = kKktTol;
  o.seed = 7;
  const FactorPair f = nmf_admm(MatrixStore::in_core(a), o);
  const double final_kkt = f.objective_trace.back();

  // Identity bases against the uncompressed solver.
  Rng init(808);
  const DenseMatrix u0 = uniform_matrix(m, r, init);
  const DenseMatrix v0 = uniform_matrix(r, n, init);
  AdmmSolver with_bases(a, DenseMatrix::Identity(m, m), DenseMatrix::Identity(n, n), u0, v0, {});
  UncompressedAdmmSolver direct(a, u0, v0, {});
  double gap = 0.0;
  for (int it = 0; it < 200; ++it) {
    with_bases.step();
    direct.step();
    const AdmmState& s1 = with_bases.state();
    const AdmmState& s2 = direct.state();
    gap = std::max({gap, (s1.x_tilde - s2.x_tilde).norm(), (s1.y_tilde - s2.y_tilde).norm(), (s1.u - s2.u).norm(),
                    (s1.v - s2.v).norm(), (s1.lambda_mult - s2.lambda_mult).norm(),
                    (s1.phi_mult - s2.phi_mult).norm()});
  }
  const bool ok = f.converged && final_kkt <= kKktTol && gap <= kIdentityPathTol;
  return {ok, fmtn("compressed ADMM max KKT %.2e after %d iterations (tol %.0e within 500); identity-basis vs direct "
                   "max iterate gap %.2e over 200 steps (tol %.0e)",
                   final_kkt, f.iterations, kKktTol, gap, kIdentityPathTol)};
}

Outcome nmf_parity() {
  struct V {
    const char* name;
    NmfMethod method;
    Compression comp;
  };
  const std::vector<V> variants = {{"MU", NmfMethod::mu, Compression::none},
                                   {"SC-MU", NmfMethod::mu, Compression::structured},
                                   {"GC-MU", NmfMethod::mu, Compression::gaussian},
                                   {"AS", NmfMethod::activeset, Compression::none},
                                   {"SC-AS", NmfMethod::activeset, Compression::structured}};
  bool ok = true;
  std::string detail;
  for (Index m : {400, 800}) {
    const Index n = m * 3 / 4, r = 5;
    std::vector<std::vector<double>> errs(variants.size());
    for (int rep = 0; rep < 10; ++rep) {
      const std::uint64_t seed = derive_seed(2024, static_cast<std::uint64_t>(m * 100 + rep));
      const MatrixStore a = gen_nmf_synthetic({m, n, r, 1.0, SyntheticKind::nmf_noisy, seed});
      for (std::size_t v = 0; v < variants.size(); ++v) {
        NmfOptions o;
        o.method = variants[v].method;
        o.compression = variants[v].comp;
        o.config = nmf_compression_defaults(r, seed);
        if (o.compression != Compression::none) o.config = adjust_config(o.config, m, n);
        o.seed = seed;
        o.max_iter = 500;
        o.tol = 1e-5;
        errs[v].push_back(nmf_alternating(a, o).relative_error);
      }
    }
    std::vector<double> mu(variants.size());
    for (std::size_t v = 0; v < variants.size(); ++v) mu[v] = mean(errs[v]);
    const bool sc_mu = std::abs(mu[1] - mu[0]) <= kParity * mu[0];
    const bool sc_as = std::abs(mu[4] - mu[3]) <= kParity * mu[3];
    const bool gc = mu[2] >= mu[1];
    ok = ok && sc_mu && sc_as && gc;
    detail += fmtn("m=%d: MU %.4f SC-MU %.4f GC-MU %.4f AS %.4f SC-AS %.4f; ", static_cast<int>(m), mu[0], mu[1],
                   mu[2], mu[3], mu[4]);
  }
  return {ok, detail + fmt("parity tol %.0f%%, GC-MU >= SC-MU", kParity * 100)};
}

Outcome nmf_speed() {
  const Index m = 2000, n = 1500, r = 5;
  const MatrixStore a = gen_nmf_synthetic({m, n, r, 1.0, SyntheticKind::nmf_noisy, 99});
  auto run = [&](Compression c) {
    NmfOptions o;
    o.method = NmfMethod::mu;
    o.compression = c;
    o.config = nmf_compression_defaults(r, 5);
    if (c != Compression::none) o.config = adjust_config(o.config, m, n);
    o.seed = 5;
    o.max_iter = 300;
    o.tol = 0.0;  // fixed sweep count for both
    const auto t0 = Clock::now();
    nmf_alternating(a, o);
    return seconds_since(t0);
  };
  const double t_full = run(Compression::none);
  const double t_sc = run(Compression::structured);
  return {t_full >= kMuSpeedup * t_sc, fmtn("300 sweeps: uncompressed MU %.2fs, SC-MU %.2fs, speedup %.1fx (>= %.0fx)",
                                            t_full, t_sc, t_full / t_sc, kMuSpeedup)};
}

Outcome snmf_recovery() {
  int recovered = 0, total = 0;
  double worst = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    const SeparableData d = gen_separable_synthetic(50, 200, 5, 0.0, 7000 + seed);
    const std::set<Index> truth(d.k.begin(), d.k.end());
    for (Selector sel : {Selector::spa, Selector::xray}) {
      for (Reduction red : {Reduction::qr, Reduction::compressed}) {
        SnmfOptions o;
        o.rank = 5;
        o.selector = sel;
        o.reduction = red;
        o.config = snmf_compression_defaults(5, static_cast<std::uint64_t>(seed));
        const SnmfResult res = snmf(d.a, o);
        ++total;
        if (std::set<Index>(res.k.begin(), res.k.end()) == truth) ++recovered;
        worst = std::max(worst, res.rel_error_full);
      }
    }
  }
  return {recovered == total && worst <= kSnmfError,
          fmtn("K recovered in %d/%d runs (SPA, XRAY x QR, compressed); max full-space error %.2e (tol %.0e)",
               recovered, total, worst, kSnmfError)};
}

Outcome snmf_speed() {
  const Index m = 400, n = 2000, r = 10;
  const SeparableData d = gen_separable_synthetic(m, n, r, 0.0, 31337);
  auto run = [&](Reduction red, Index& rows) {
    std::vector<double> times;
    for (int rep = 0; rep < 3; ++rep) {
      SnmfOptions o;
      o.rank = r;
      o.reduction = red;
      o.config = snmf_compression_defaults(r, 1);
      const auto t0 = Clock::now();
      rows = snmf(d.a, o).reduced_rows;
      times.push_back(seconds_since(t0));
    }
    return median(times);
  };
  Index qr_rows = 0, c_rows = 0;
  const double t_qr = run(Reduction::qr, qr_rows);
  const double t_c = run(Reduction::compressed, c_rows);
  const Index expected = std::min<Index>(std::max<Index>(20, r + 10), n);
  const bool ok = t_qr >= kSnmfSpeedup * t_c && c_rows == expected;
  return {ok, fmtn("QR reduction %.3fs (R has %d rows), compressed %.3fs (R has %d rows, expected %d); speedup %.1fx "
                   "(>= %.0fx)",
                   t_qr, static_cast<int>(qr_rows), t_c, static_cast<int>(c_rows), static_cast<int>(expected),
                   t_qr / t_c, kSnmfSpeedup)};
}

Outcome reduced_equivalence() {
  double worst = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(600 + seed);
    const Index m = 300, n = 60, k = 8;
    const DenseMatrix a = uniform_matrix(m, k, rng) * uniform_matrix(k, n, rng);
    std::vector<Index> cols;
    for (Index j = 0; j < k; ++j) cols.push_back((j * 7 + seed) % n);
    DenseMatrix ak(m, k);
    for (Index j = 0; j < k; ++j) ak.col(j) = a.col(cols[j]);
    const DenseMatrix h = uniform_matrix(k, n, rng);
    const double full = (a - ak * h).norm();

    const DenseMatrix q = structured_compress(a, CompressionConfig{k, 10, 0, static_cast<std::uint64_t>(seed)}).q.dense();
    const double reduced = (q.transpose() * a - q.transpose() * ak * h).norm();
    // QR reduction: R = QᵀA from TSQR; R[:, K] = QᵀA[:, K].
    const DenseMatrix rr = tsqr(MatrixStore::in_core(a)).r;
    DenseMatrix rk(rr.rows(), k);
    for (Index j = 0; j < k; ++j) rk.col(j) = rr.col(cols[j]);
    const double via_qr = (rr - rk * h).norm();
    const double scale = std::max(1.0, full);
    worst = std::max({worst, std::abs(full - reduced) / scale, std::abs(full - via_qr) / scale});
  }
  return {worst <= kReducedTol,
          fmtn("max |‖QᵀA − QᵀA_K H‖ − ‖A − A_K H‖| / max(1, ‖A − A_K H‖) = %.2e (tol %.0e)", worst, kReducedTol)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc == 6 && std::string(argv[1]) == "--out-of-core-child") {
    try {
      return out_of_core_child(argv[2], argv[3], argv[4], argv[5]);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "out-of-core child: %s\n", e.what());
      return 1;
    }
  }
  report(1, "compression error bound", compression_bound);
  report(2, "power iterations shrink the spectral residual", power_iteration_effect);
  report(3, "TSQR correctness", tsqr_correctness);
  report(4, "out-of-core compression equals in-core", out_of_core_equivalence);
  report(5, "NNLS matches support enumeration", nnls_oracle);
  report(6, "MU objective is monotone", mu_monotone);
  report(7, "ADMM KKT convergence and identity-basis equivalence", admm_kkt);
  report(8, "compressed NMF accuracy parity", nmf_parity);
  report(9, "compressed MU speed", nmf_speed);
  report(10, "SNMF exact recovery", snmf_recovery);
  report(11, "SNMF compressed reduction speed", snmf_speed);
  report(12, "reduced-space objective equivalence", reduced_equivalence);
  std::printf("%d of 12 criteria passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}
