#include "cnmf/nmf.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <string>

#include "cnmf/nnls.hpp"
#include "cnmf/rng.hpp"

namespace cnmf {
namespace {

constexpr double kMuEpsilon = 1e-16;

DenseMatrix pos(const ConstMatrixRef& m) { return (m.array().abs() + m.array()).matrix() * 0.5; }
DenseMatrix neg(const ConstMatrixRef& m) { return (m.array().abs() - m.array()).matrix() * 0.5; }

// factor ∘ sqrt((num_pos + grow) / (num_neg + shrink + ε))
DenseMatrix mu_apply(const ConstMatrixRef& factor, const DenseMatrix& numer, const DenseMatrix& grow,
                     const DenseMatrix& shrink) {
  const DenseMatrix up = pos(numer) + grow;
  const DenseMatrix down = neg(numer) + shrink;
  DenseMatrix out = (factor.array() * (up.array() / (down.array() + kMuEpsilon)).sqrt()).matrix();
  require_finite(out, "multiplicative update");
  return out;
}

// Y update from XᵀA (numer) and XᵀX (gram).
DenseMatrix mu_right(const ConstMatrixRef& y, const DenseMatrix& numer, const DenseMatrix& gram) {
  return mu_apply(y, numer, neg(gram) * y, pos(gram) * y);
}

// X update from AYᵀ (numer) and YYᵀ (gram).
DenseMatrix mu_left(const ConstMatrixRef& x, const DenseMatrix& numer, const DenseMatrix& gram) {
  return mu_apply(x, numer, x * neg(gram), x * pos(gram));
}

DenseMatrix positive_part(const DenseMatrix& m) { return m.cwiseMax(0.0); }

double inner(const ConstMatrixRef& a, const ConstMatrixRef& b) { return (a.array() * b.array()).sum(); }

// Compressed-side operators shared by the alternating drivers.
struct Sketches {
  DenseMatrix l;        // m x s (empty when uncompressed)
  DenseMatrix r_basis;  // n x s, so R = r_basisᵀ
  DenseMatrix a_check;  // A Rᵀ, m x s
  DenseMatrix a_hat;    // LᵀA, s x n
};

Sketches build_sketches(const MatrixStore& a, const CompressionConfig& cfg, Compression kind, std::uint64_t seed,
                        const Resources& res) {
  Sketches sk;
  CompressionConfig left = cfg;
  left.seed = derive_seed(seed, 1);
  CompressionConfig right = cfg;
  right.seed = derive_seed(seed, 2);
  if (kind == Compression::structured) {
    sk.l = structured_compress(a, left, res).q.to_dense();
    sk.r_basis = structured_compress_transpose(a, right, res).q.to_dense();
  } else {
    sk.l = gaussian_compress(a.rows(), cfg.sketch_size(), left.seed).q.to_dense();
    sk.r_basis = gaussian_compress(a.cols(), cfg.sketch_size(), right.seed).q.to_dense();
  }
  sk.a_check = matmul_blocked(a, sk.r_basis, res).to_dense();
  sk.a_hat = transpose_times(a, sk.l).transpose();
  return sk;
}

void check_rank(Index rank, Index m, Index n) {
  if (rank < 1) throw ArgumentError("rank must be >= 1");
  if (rank > std::min(m, n)) {
    throw InfeasibleRankError("rank " + std::to_string(rank) + " exceeds min(m, n) = " + std::to_string(std::min(m, n)));
  }
}

DenseMatrix solve_spd_right(const DenseMatrix& rhs, const DenseMatrix& spd) {
  // rhs · spd⁻¹ for symmetric positive definite spd.
  Eigen::LLT<Eigen::MatrixXd> llt(spd);
  if (llt.info() != Eigen::Success) throw NumericError("admm: penalized Gram matrix is not positive definite");
  return llt.solve(rhs.transpose()).transpose();
}

DenseMatrix solve_spd_left(const DenseMatrix& spd, const DenseMatrix& rhs) {
  Eigen::LLT<Eigen::MatrixXd> llt(spd);
  if (llt.info() != Eigen::Success) throw NumericError("admm: penalized Gram matrix is not positive definite");
  return llt.solve(rhs);
}

double complementarity(const DenseMatrix& mult, const DenseMatrix& primal) {
  const double product = (mult.array() * primal.array()).matrix().norm();
  const double mult_sign = mult.cwiseMax(0.0).norm();
  const double primal_sign = primal.cwiseMin(0.0).norm();
  return product + mult_sign + primal_sign;
}

void check_params(const AdmmParams& p) {
  if (!(p.lambda > 0.0) || !(p.phi > 0.0) || !(p.xi > 0.0)) throw ArgumentError("admm: lambda, phi, xi must be > 0");
}

}  // namespace

std::string to_string(NmfMethod m) { return m == NmfMethod::mu ? "mu" : "activeset"; }

std::string to_string(Compression c) {
  switch (c) {
    case Compression::none:
      return "none";
    case Compression::gaussian:
      return "gaussian";
    case Compression::structured:
      return "structured";
  }
  return "?";
}

DenseMatrix mu_step(const ConstMatrixRef& a_eff, const ConstMatrixRef& x, const ConstMatrixRef& y, Side side) {
  if (x.cols() != y.rows() || a_eff.rows() != x.rows() || a_eff.cols() != y.cols()) {
    throw ArgumentError("mu_step: inconsistent shapes");
  }
  require_finite(a_eff, "mu_step data");
  require_finite(x, "mu_step left factor");
  require_finite(y, "mu_step right factor");
  if (side == Side::right) {
    const DenseMatrix numer = x.transpose() * a_eff;
    const DenseMatrix gram = x.transpose() * x;
    return mu_right(y, numer, gram);
  }
  const DenseMatrix numer = a_eff * y.transpose();
  const DenseMatrix gram = y * y.transpose();
  return mu_left(x, numer, gram);
}

FactorPair nmf_alternating(const MatrixStore& a, const NmfOptions& opts) {
  const Index m = a.rows();
  const Index n = a.cols();
  const Index rank = opts.config.rank;
  check_rank(rank, m, n);
  if (opts.compression != Compression::none) validate_config(opts.config, m, n);
  if (opts.max_iter < 1) throw ArgumentError("max_iter must be >= 1");

  Rng y_rng(derive_seed(opts.seed, 3));
  Rng x_rng(derive_seed(opts.seed, 4));
  DenseMatrix y = opts.initial_y ? *opts.initial_y : uniform_matrix(rank, n, y_rng);
  DenseMatrix x = opts.initial_x ? *opts.initial_x : uniform_matrix(m, rank, x_rng);
  if (y.rows() != rank || y.cols() != n || x.rows() != m || x.cols() != rank) {
    throw ArgumentError("nmf: initial factors have the wrong shape");
  }
  if ((y.array() < 0.0).any() || (x.array() < 0.0).any()) throw ArgumentError("nmf: initial factors must be >= 0");

  const bool compressed = opts.compression != Compression::none;
  Sketches sk;
  DenseMatrix a_dense;
  if (compressed) {
    sk = build_sketches(a, opts.config, opts.compression, opts.seed, opts.resources);
  } else {
    a_dense = a.to_dense();
  }
  const DenseMatrix& a_check = compressed ? sk.a_check : a_dense;
  const DenseMatrix& a_hat = compressed ? sk.a_hat : a_dense;
  const double a_hat_sq = a_hat.squaredNorm();

  FactorPair out;
  const NnlsOptions nnls_opts;
  double previous = 0.0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    try {
      // X step against A Rᵀ with design Y Rᵀ.
      const DenseMatrix y_check = compressed ? DenseMatrix(y * sk.r_basis) : y;
      const DenseMatrix gram_y = y_check * y_check.transpose();
      if (opts.method == NmfMethod::mu) {
        const DenseMatrix numer = a_check * y_check.transpose();
        x = mu_left(x, numer, gram_y);
      } else {
        const DenseMatrix rhs = y_check * a_check.transpose();
        x = nnls_solve_gram(gram_y, rhs, nnls_opts).transpose();
      }
      // Y step against LᵀA with design LᵀX.
      const DenseMatrix x_hat = compressed ? DenseMatrix(sk.l.transpose() * x) : x;
      const DenseMatrix gram_x = x_hat.transpose() * x_hat;
      const DenseMatrix numer = x_hat.transpose() * a_hat;
      if (opts.method == NmfMethod::mu) {
        y = mu_right(y, numer, gram_x);
      } else {
        y = nnls_solve_gram(gram_x, numer, nnls_opts);
      }
      const double objective =
          std::max(0.0, a_hat_sq - 2.0 * inner(numer, y) + inner(gram_x, y * y.transpose()));
      out.objective_trace.push_back(objective);
      out.iterations = it;
      if (it > 1) {
        const double change = std::abs(previous - objective) / std::max(previous, 1e-300);
        if (change < opts.tol) {
          out.converged = true;
          break;
        }
      }
      previous = objective;
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("nmf iteration " + std::to_string(it) + ": " + e.what(), e.best_iterate());
    }
  }
  out.x = std::move(x);
  out.y = std::move(y);
  out.relative_error = relative_error(a, out.x, out.y);
  return out;
}

// ---------------------------------------------------------------------------

double KktResidual::max() const { return std::max({a, b, c, d, e, f}); }

KktResidual kkt_residual(const AdmmState& s, const ConstMatrixRef& a_tilde, const ConstMatrixRef& l,
                         const ConstMatrixRef& r) {
  if (l.cols() != s.x_tilde.rows() || r.rows() != s.y_tilde.cols() || l.rows() != s.u.rows() ||
      r.cols() != s.v.cols() || a_tilde.rows() != s.x_tilde.rows() || a_tilde.cols() != s.y_tilde.cols()) {
    throw ArgumentError("kkt_residual: inconsistent shapes");
  }
  const DenseMatrix fit = s.x_tilde * s.y_tilde - a_tilde;
  KktResidual k;
  k.a = (fit * s.y_tilde.transpose() + l.transpose() * s.lambda_mult).norm();
  k.b = (s.x_tilde.transpose() * fit + s.phi_mult * r.transpose()).norm();
  k.c = (l * s.x_tilde - s.u).norm();
  k.d = (s.y_tilde * r - s.v).norm();
  k.e = complementarity(s.lambda_mult, s.u);
  k.f = complementarity(s.phi_mult, s.v);
  return k;
}

AdmmSolver::AdmmSolver(DenseMatrix a_tilde, DenseMatrix l, DenseMatrix r, DenseMatrix u0, DenseMatrix v0,
                       AdmmParams params)
    : a_tilde_(std::move(a_tilde)), l_(std::move(l)), r_(std::move(r)), params_(params) {
  check_params(params_);
  const Index rank = u0.cols();
  if (v0.rows() != rank || l_.rows() != u0.rows() || r_.cols() != v0.cols() || a_tilde_.rows() != l_.cols() ||
      a_tilde_.cols() != r_.rows()) {
    throw ArgumentError("admm: inconsistent shapes");
  }
  state_.u = std::move(u0);
  state_.v = std::move(v0);
  state_.y_tilde = state_.v * r_.transpose();
  state_.x_tilde = DenseMatrix::Zero(l_.cols(), rank);
  state_.lambda_mult = DenseMatrix::Zero(state_.u.rows(), rank);
  state_.phi_mult = DenseMatrix::Zero(rank, state_.v.cols());
}

void AdmmSolver::step() {
  const double lam = params_.lambda;
  const double ph = params_.phi;
  AdmmState& s = state_;
  const Index rank = s.u.cols();
  const DenseMatrix eye = DenseMatrix::Identity(rank, rank);

  const DenseMatrix x_rhs =
      a_tilde_ * s.y_tilde.transpose() + lam * (l_.transpose() * s.u) - l_.transpose() * s.lambda_mult;
  s.x_tilde = solve_spd_right(x_rhs, s.y_tilde * s.y_tilde.transpose() + lam * eye);

  const DenseMatrix y_rhs =
      s.x_tilde.transpose() * a_tilde_ + ph * (s.v * r_.transpose()) - s.phi_mult * r_.transpose();
  s.y_tilde = solve_spd_left(s.x_tilde.transpose() * s.x_tilde + ph * eye, y_rhs);

  const DenseMatrix lx = l_ * s.x_tilde;
  const DenseMatrix yr = s.y_tilde * r_;
  s.u = positive_part(lx + s.lambda_mult / lam);
  s.v = positive_part(yr + s.phi_mult / ph);
  s.lambda_mult += params_.xi * lam * (lx - s.u);
  s.phi_mult += params_.xi * ph * (yr - s.v);
}

UncompressedAdmmSolver::UncompressedAdmmSolver(DenseMatrix a, DenseMatrix u0, DenseMatrix v0, AdmmParams params)
    : a_(std::move(a)), params_(params) {
  check_params(params_);
  const Index rank = u0.cols();
  if (v0.rows() != rank || a_.rows() != u0.rows() || a_.cols() != v0.cols()) {
    throw ArgumentError("admm: inconsistent shapes");
  }
  state_.u = std::move(u0);
  state_.v = std::move(v0);
  state_.y_tilde = state_.v;
  state_.x_tilde = DenseMatrix::Zero(a_.rows(), rank);
  state_.lambda_mult = DenseMatrix::Zero(a_.rows(), rank);
  state_.phi_mult = DenseMatrix::Zero(rank, a_.cols());
}

void UncompressedAdmmSolver::step() {
  const double lam = params_.lambda;
  const double ph = params_.phi;
  AdmmState& s = state_;
  const Index rank = s.u.cols();
  const DenseMatrix eye = DenseMatrix::Identity(rank, rank);

  const DenseMatrix x_rhs = a_ * s.y_tilde.transpose() + lam * s.u - s.lambda_mult;
  s.x_tilde = solve_spd_right(x_rhs, s.y_tilde * s.y_tilde.transpose() + lam * eye);

  const DenseMatrix y_rhs = s.x_tilde.transpose() * a_ + ph * s.v - s.phi_mult;
  s.y_tilde = solve_spd_left(s.x_tilde.transpose() * s.x_tilde + ph * eye, y_rhs);

  s.u = positive_part(s.x_tilde + s.lambda_mult / lam);
  s.v = positive_part(s.y_tilde + s.phi_mult / ph);
  s.lambda_mult += params_.xi * lam * (s.x_tilde - s.u);
  s.phi_mult += params_.xi * ph * (s.y_tilde - s.v);
}

KktResidual UncompressedAdmmSolver::kkt() const {
  const AdmmState& s = state_;
  const DenseMatrix fit = s.x_tilde * s.y_tilde - a_;
  KktResidual k;
  k.a = (fit * s.y_tilde.transpose() + s.lambda_mult).norm();
  k.b = (s.x_tilde.transpose() * fit + s.phi_mult).norm();
  k.c = (s.x_tilde - s.u).norm();
  k.d = (s.y_tilde - s.v).norm();
  k.e = complementarity(s.lambda_mult, s.u);
  k.f = complementarity(s.phi_mult, s.v);
  return k;
}

namespace {

template <class Solver>
FactorPair run_admm(Solver& solver, const AdmmOptions& opts) {
  FactorPair out;
  constexpr int kWindow = 50;
  for (int it = 1; it <= opts.max_iter; ++it) {
    solver.step();
    const double score = solver.kkt().max();
    if (!std::isfinite(score)) throw NumericError("admm: non-finite KKT residual at iteration " + std::to_string(it));
    out.objective_trace.push_back(score);
    out.iterations = it;
    if (score < opts.tol) {
      out.converged = true;
      break;
    }
    if (it > kWindow && score > 10.0 * out.objective_trace[static_cast<std::size_t>(it - 1 - kWindow)]) {
      throw DivergenceError("admm: KKT residual grew tenfold over " + std::to_string(kWindow) +
                                " iterations (iteration " + std::to_string(it) + ")",
                            out.objective_trace);
    }
  }
  out.x = solver.state().u;
  out.y = solver.state().v;
  return out;
}

}  // namespace

FactorPair nmf_admm(const MatrixStore& a, const AdmmOptions& opts) {
  const Index m = a.rows();
  const Index n = a.cols();
  const Index rank = opts.config.rank;
  check_rank(rank, m, n);
  check_params(opts.params);
  if (opts.max_iter < 1) throw ArgumentError("max_iter must be >= 1");
  Rng v_rng(derive_seed(opts.seed, 3));
  Rng u_rng(derive_seed(opts.seed, 4));
  DenseMatrix v0 = uniform_matrix(rank, n, v_rng);
  DenseMatrix u0 = uniform_matrix(m, rank, u_rng);

  FactorPair out;
  if (opts.compressed) {
    validate_config(opts.config, m, n);
    Sketches sk = build_sketches(a, opts.config, Compression::structured, opts.seed, opts.resources);
    DenseMatrix a_tilde = sk.l.transpose() * sk.a_check;
    DenseMatrix r = sk.r_basis.transpose();
    AdmmSolver solver(std::move(a_tilde), std::move(sk.l), std::move(r), std::move(u0), std::move(v0), opts.params);
    out = run_admm(solver, opts);
  } else {
    UncompressedAdmmSolver solver(a.to_dense(), std::move(u0), std::move(v0), opts.params);
    out = run_admm(solver, opts);
  }
  out.relative_error = relative_error(a, out.x, out.y);
  return out;
}

double relative_error(const MatrixStore& a, const ConstMatrixRef& x, const ConstMatrixRef& y) {
  if (x.rows() != a.rows() || y.cols() != a.cols() || x.cols() != y.rows()) {
    throw ArgumentError("relative_error: factor shapes do not match the matrix");
  }
  double residual = 0.0;
  double total = 0.0;
  a.for_each_block([&](Index r0, const ConstMatrixRef& block) {
    total += block.squaredNorm();
    residual += (block - x.middleRows(r0, block.rows()) * y).squaredNorm();
  });
  if (total == 0.0) throw UndefinedMetricError("relative_error: ‖A‖_F = 0");
  return std::sqrt(residual / total);
}

}  // namespace cnmf
