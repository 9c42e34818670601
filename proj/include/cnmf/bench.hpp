#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cnmf/matrix_store.hpp"

namespace cnmf {

enum class SyntheticKind { nmf_noisy, snmf_gaussian };

struct SyntheticSpec {
  Index m = 0;
  Index n = 0;
  Index r = 0;
  double delta = 1.0;  // density of the factors, in (0, 1]
  SyntheticKind kind = SyntheticKind::nmf_noisy;
  std::uint64_t seed = 0;
};

struct SyntheticFactors {
  DenseMatrix x;  // m x r
  DenseMatrix y;  // r x n
};

/// Ground-truth factors of a spec. nmf_noisy: entries U[0,1] with probability
/// delta, else 0. snmf_gaussian: standard normal.
SyntheticFactors synthetic_factors(const SyntheticSpec& spec);

/// A = X Y + N for nmf_noisy, with N standard normal entries present with
/// probability delta². Negative entries from N are kept. Rows are generated
/// block by block; the result is file-backed when it exceeds half the budget.
MatrixStore gen_nmf_synthetic(const SyntheticSpec& spec, const Resources& res = Resources::from_env());

/// A = X Y with standard normal X and Y (rank r almost surely).
MatrixStore gen_snmf_synthetic(const SyntheticSpec& spec, const Resources& res = Resources::from_env());

struct SeparableData {
  MatrixStore a;
  std::vector<Index> k;  // sorted extreme column indices
  DenseMatrix w;         // m x r, U[0,1]
  DenseMatrix h;         // r x n; identity at k, convex combinations elsewhere
};

/// A = W H + noise · N with H holding an r x r identity at random distinct
/// columns k and random convex combinations in the other columns.
SeparableData gen_separable_synthetic(Index m, Index n, Index r, double noise, std::uint64_t seed);

/// Biclustering cleanup: in every column of X and row of Y, entries strictly
/// below mean + 3·std (population std) become zero, then only the `top`
/// largest surviving entries of each X column are kept.
std::pair<DenseMatrix, DenseMatrix> threshold_factors(DenseMatrix x, DenseMatrix y, Index top = 25);

struct RunReport {
  std::string variant;
  Index m = 0;
  Index n = 0;
  Index r = 0;
  double delta = 1.0;
  std::uint64_t seed = 0;
  double time_s = 0.0;
  double rel_error = 0.0;
  int iterations = 0;
  bool failed = false;
  std::string failure;
};

struct BenchmarkOptions {
  bool parallel = false;
  Resources resources = Resources::from_env();
};

struct BenchmarkSummary {
  std::vector<RunReport> raw;
  std::vector<RunReport> summary;  // per (variant, size): median time, mean error
};

/// Runs a suite described by a JSON file and writes summary.csv, raw.csv and
/// manifest.json into out_dir. Failed cells become rows with nan time and
/// error and iterations -1; the suite carries on.
BenchmarkSummary run_benchmark(const std::filesystem::path& suite, const std::filesystem::path& out_dir,
                               const BenchmarkOptions& opts = {});

/// CSV header shared by both outputs.
extern const char* const kReportHeader;

}  // namespace cnmf
