// cnmf command-line tool: nmf, snmf, bench, gen and convert subcommands.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "cnmf/bench.hpp"
#include "cnmf/compress.hpp"
#include "cnmf/nmf.hpp"
#include "cnmf/snmf.hpp"

namespace {

using cnmf::DenseMatrix;
using cnmf::Index;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct CommonFlags {
  std::string input;
  Index rank = 0;
  Index oversample = 10;
  std::optional<int> power;
  std::uint64_t seed = 0;
  Index block_rows = 0;
  std::string scratch_dir;
  double mem_budget_mb = 0.0;
  std::string report;

  cnmf::Resources resources() const {
    cnmf::Resources res = mem_budget_mb > 0 ? cnmf::Resources::with_budget_mb(mem_budget_mb)
                                            : cnmf::Resources::from_env();
    if (!scratch_dir.empty()) res.scratch_dir = scratch_dir;
    return res;
  }

  cnmf::MatrixStore load() const {
    cnmf::LoadOptions lo;
    lo.resources = resources();
    lo.block_rows = block_rows;
    return cnmf::load_matrix(input, cnmf::format_for_path(input), lo);
  }

  cnmf::CompressionConfig config(int default_power) const {
    cnmf::CompressionConfig cfg;
    cfg.rank = rank;
    cfg.oversample = oversample;
    cfg.power = power.value_or(default_power);
    cfg.seed = seed;
    return cfg;
  }
};

void add_common(CLI::App* app, CommonFlags& f, bool needs_rank = true) {
  app->add_option("--input", f.input, "Input matrix (.cnmf binary or .csv)")->required()->check(CLI::ExistingFile);
  auto* rank = app->add_option("--rank", f.rank, "Target rank r")->check(CLI::PositiveNumber);
  if (needs_rank) rank->required();
  app->add_option("--oversample", f.oversample, "Oversampling r_ov before adjustment")->check(CLI::NonNegativeNumber);
  app->add_option("--power", f.power, "Power iterations w")->check(CLI::NonNegativeNumber);
  app->add_option("--seed", f.seed, "Random seed");
  app->add_option("--block-rows", f.block_rows, "Rows per block for file-backed input")->check(CLI::PositiveNumber);
  app->add_option("--scratch-dir", f.scratch_dir, "Directory for scratch files");
  app->add_option("--mem-budget-mb", f.mem_budget_mb, "Memory budget in MiB (default: CNMF_MEM_BUDGET_MB or 1024)")
      ->check(CLI::PositiveNumber);
  app->add_option("--report", f.report, "Write a JSON report here");
}

void save_matrix(const DenseMatrix& m, const std::string& path) {
  if (path.empty()) return;
  if (cnmf::format_for_path(path) == cnmf::MatrixFormat::csv) {
    cnmf::save_csv(m, path);
  } else {
    cnmf::save_binary(m, path);
  }
}

void write_json(const json& j, const std::string& path) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw cnmf::Error(path + ": cannot write");
  out << j.dump(2) << '\n';
}

json config_json(const cnmf::CompressionConfig& c) {
  return {{"rank", c.rank}, {"oversample", c.oversample}, {"power", c.power}, {"seed", c.seed}};
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------------------

struct NmfFlags {
  CommonFlags common;
  std::string method = "mu";
  std::string compress = "structured";
  int max_iter = 500;
  std::optional<double> tol;
  std::string out_x, out_y;
  std::optional<Index> threshold_top;
};

int run_nmf(const NmfFlags& f) {
  const cnmf::MatrixStore a = f.common.load();
  const auto t0 = Clock::now();
  cnmf::FactorPair result;
  cnmf::CompressionConfig cfg = f.common.config(4);
  const bool compressed = f.compress != "none";
  if (compressed) cfg = cnmf::adjust_config(cfg, a.rows(), a.cols());
  if (f.method == "admm") {
    if (f.compress == "gaussian") throw cnmf::ArgumentError("ADMM supports --compress none or structured");
    cnmf::AdmmOptions o;
    o.config = cfg;
    o.compressed = compressed;
    o.max_iter = f.max_iter;
    o.tol = f.tol.value_or(1e-4);
    o.seed = f.common.seed;
    o.resources = f.common.resources();
    result = cnmf::nmf_admm(a, o);
  } else {
    cnmf::NmfOptions o;
    o.config = cfg;
    o.method = f.method == "mu" ? cnmf::NmfMethod::mu : cnmf::NmfMethod::activeset;
    o.compression = f.compress == "none"       ? cnmf::Compression::none
                    : f.compress == "gaussian" ? cnmf::Compression::gaussian
                                               : cnmf::Compression::structured;
    o.max_iter = f.max_iter;
    o.tol = f.tol.value_or(1e-5);
    o.seed = f.common.seed;
    o.resources = f.common.resources();
    result = cnmf::nmf_alternating(a, o);
  }
  const double elapsed = seconds_since(t0);
  if (f.threshold_top) {
    auto [x, y] = cnmf::threshold_factors(result.x, result.y, *f.threshold_top);
    result.x = std::move(x);
    result.y = std::move(y);
  }
  save_matrix(result.x, f.out_x);
  save_matrix(result.y, f.out_y);
  json report = {{"command", "nmf"},
                 {"input", f.common.input},
                 {"m", a.rows()},
                 {"n", a.cols()},
                 {"method", f.method},
                 {"compression", f.compress},
                 {"config", config_json(cfg)},
                 {"iterations", result.iterations},
                 {"converged", result.converged},
                 {"time_s", elapsed},
                 {"relative_error", result.relative_error},
                 {"objective_trace", result.objective_trace}};
  if (f.threshold_top) report["thresholded_relative_error"] = cnmf::relative_error(a, result.x, result.y);
  write_json(report, f.common.report);
  std::printf("nmf: %d iterations, relative error %.6g, %.3f s\n", result.iterations, result.relative_error, elapsed);
  return 0;
}

struct SnmfFlags {
  CommonFlags common;
  std::string selector = "spa";
  std::string reduce = "compressed";
  std::string out_k, out_y;
};

int run_snmf(const SnmfFlags& f) {
  const cnmf::MatrixStore a = f.common.load();
  cnmf::SnmfOptions o;
  o.rank = f.common.rank;
  o.selector = f.selector == "spa" ? cnmf::Selector::spa : cnmf::Selector::xray;
  o.reduction = f.reduce == "qr" ? cnmf::Reduction::qr : cnmf::Reduction::compressed;
  o.config = f.common.config(0);
  o.resources = f.common.resources();
  const auto t0 = Clock::now();
  const cnmf::SnmfResult r = cnmf::snmf(a, o);
  const double elapsed = seconds_since(t0);
  write_json(json(r.k), f.out_k);
  save_matrix(r.y, f.out_y);
  write_json({{"command", "snmf"},
              {"input", f.common.input},
              {"m", a.rows()},
              {"n", a.cols()},
              {"selector", f.selector},
              {"reduction", f.reduce},
              {"config", config_json(o.config)},
              {"k", r.k},
              {"reduced_rows", r.reduced_rows},
              {"rel_error_reduced", r.rel_error_reduced},
              {"rel_error_full", r.rel_error_full},
              {"time_s", elapsed}},
             f.common.report);
  std::printf("snmf: %zu columns, relative error %.6g (reduced %.6g), %.3f s\n", r.k.size(), r.rel_error_full,
              r.rel_error_reduced, elapsed);
  return 0;
}

struct GenFlags {
  std::string kind = "nmf_noisy";
  Index m = 0, n = 0, rank = 0;
  double delta = 1.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out, out_k;
  double mem_budget_mb = 0.0;
  std::string scratch_dir;
};

int run_gen(const GenFlags& f) {
  cnmf::Resources res = f.mem_budget_mb > 0 ? cnmf::Resources::with_budget_mb(f.mem_budget_mb)
                                            : cnmf::Resources::from_env();
  if (!f.scratch_dir.empty()) res.scratch_dir = f.scratch_dir;
  if (f.kind == "separable") {
    const cnmf::SeparableData d = cnmf::gen_separable_synthetic(f.m, f.n, f.rank, f.noise, f.seed);
    cnmf::save_binary(d.a, f.out);
    write_json(json(d.k), f.out_k);
  } else {
    const cnmf::SyntheticKind kind =
        f.kind == "nmf_noisy" ? cnmf::SyntheticKind::nmf_noisy : cnmf::SyntheticKind::snmf_gaussian;
    const cnmf::SyntheticSpec spec{f.m, f.n, f.rank, f.delta, kind, f.seed};
    const cnmf::MatrixStore a =
        kind == cnmf::SyntheticKind::nmf_noisy ? cnmf::gen_nmf_synthetic(spec, res) : cnmf::gen_snmf_synthetic(spec, res);
    cnmf::save_binary(a, f.out);
  }
  return 0;
}

int run_convert(const std::string& in, const std::string& out) {
  cnmf::LoadOptions lo;
  const cnmf::MatrixStore a = cnmf::load_matrix(in, cnmf::format_for_path(in), lo);
  if (cnmf::format_for_path(out) == cnmf::MatrixFormat::csv) {
    cnmf::save_csv(a.to_dense(), out);
  } else {
    cnmf::save_binary(a, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured random compression for nonnegative matrix factorization"};
  app.require_subcommand(1);

  NmfFlags nmf;
  auto* nmf_cmd = app.add_subcommand("nmf", "Nonnegative matrix factorization A ~ XY");
  add_common(nmf_cmd, nmf.common);
  nmf_cmd->add_option("--method", nmf.method, "Update rule")->check(CLI::IsMember({"mu", "activeset", "admm"}));
  nmf_cmd->add_option("--compress", nmf.compress, "Compression")->check(CLI::IsMember({"none", "gaussian", "structured"}));
  nmf_cmd->add_option("--max-iter", nmf.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  nmf_cmd->add_option("--tol", nmf.tol, "Stopping tolerance (default 1e-5, ADMM 1e-4)");
  nmf_cmd->add_option("--out-x", nmf.out_x, "Write X here");
  nmf_cmd->add_option("--out-y", nmf.out_y, "Write Y here");
  nmf_cmd->add_option("--threshold-top", nmf.threshold_top,
                      "Zero entries below mean + 3 std and keep the largest N per column of X")
      ->check(CLI::PositiveNumber);

  SnmfFlags snmf;
  auto* snmf_cmd = app.add_subcommand("snmf", "Separable NMF A ~ A[:, K] Y");
  add_common(snmf_cmd, snmf.common);
  snmf_cmd->add_option("--selector", snmf.selector, "Column selector")->check(CLI::IsMember({"spa", "xray"}));
  snmf_cmd->add_option("--reduce", snmf.reduce, "Reduction")->check(CLI::IsMember({"qr", "compressed"}));
  snmf_cmd->add_option("--out-k", snmf.out_k, "Write selected columns (JSON) here");
  snmf_cmd->add_option("--out-y", snmf.out_y, "Write Y here");

  std::string suite, bench_out;
  bool parallel = false;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite");
  bench_cmd->add_option("--suite", suite, "Suite JSON file")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--out", bench_out, "Output directory")->required();
  bench_cmd->add_flag("--parallel", parallel, "Run cells concurrently (error-only suites)");

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic matrix");
  gen_cmd->add_option("--kind", gen.kind, "Generator")->check(CLI::IsMember({"nmf_noisy", "snmf_gaussian", "separable"}));
  gen_cmd->add_option("--m", gen.m, "Rows")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n", gen.n, "Columns")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--rank", gen.rank, "Rank")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--delta", gen.delta, "Factor density in (0, 1]");
  gen_cmd->add_option("--noise", gen.noise, "Noise level for the separable generator");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--out", gen.out, "Output matrix (.cnmf)")->required();
  gen_cmd->add_option("--out-k", gen.out_k, "Write the true extreme columns (separable)");
  gen_cmd->add_option("--mem-budget-mb", gen.mem_budget_mb, "Memory budget in MiB")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--scratch-dir", gen.scratch_dir, "Directory for scratch files");

  std::string conv_in, conv_out;
  auto* conv_cmd = app.add_subcommand("convert", "Convert between CSV and the binary format");
  conv_cmd->add_option("--input", conv_in, "Input matrix")->required()->check(CLI::ExistingFile);
  conv_cmd->add_option("--out", conv_out, "Output matrix; format from the extension")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; everything else is a usage error.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (nmf_cmd->parsed()) return run_nmf(nmf);
    if (snmf_cmd->parsed()) return run_snmf(snmf);
    if (bench_cmd->parsed()) {
      cnmf::BenchmarkOptions o;
      o.parallel = parallel;
      const cnmf::BenchmarkSummary s = cnmf::run_benchmark(suite, bench_out, o);
      std::size_t failed = 0;
      for (const auto& r : s.raw) failed += r.failed ? 1 : 0;
      std::printf("bench: %zu runs (%zu failed), %zu summary rows written to %s\n", s.raw.size(), failed,
                  s.summary.size(), bench_out.c_str());
      return 0;
    }
    if (gen_cmd->parsed()) return run_gen(gen);
    if (conv_cmd->parsed()) return run_convert(conv_in, conv_out);
  } catch (const cnmf::ArgumentError& e) {
    std::cerr << "cnmf: error: " << e.what() << '\n';
    return 2;
  } catch (const cnmf::ParseError& e) {
    std::cerr << "cnmf: error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cnmf: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
