#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cnmf/compress.hpp"
#include "cnmf/matrix_store.hpp"

namespace cnmf {

/// Nonnegative factors X (m x r) and Y (r x n).
struct FactorPair {
  DenseMatrix x;
  DenseMatrix y;
  int iterations = 0;
  /// Per-iteration objective: ‖A − XY‖_F² uncompressed, the compressed-space
  /// objective ‖LᵀA − LᵀXY‖_F² for compressed runs, max KKT residual for ADMM.
  std::vector<double> objective_trace;
  /// ‖A − XY‖_F / ‖A‖_F from one final pass over A.
  double relative_error = 0.0;
  bool converged = false;
};

enum class NmfMethod { mu, activeset };
enum class Compression { none, gaussian, structured };
enum class Side { left, right };

std::string to_string(NmfMethod m);
std::string to_string(Compression c);

/// One semi-NMF-safe multiplicative update for A_eff ≈ X Y.
///
/// Side::right updates Y:
///   Y ← Y ∘ sqrt( ((XᵀA)⁺ + (XᵀX)⁻ Y) / ((XᵀA)⁻ + (XᵀX)⁺ Y + ε) )
/// Side::left updates X symmetrically with AYᵀ and YYᵀ. M⁺ = (|M| + M)/2,
/// M⁻ = (|M| − M)/2 and ε = 1e-16, so A_eff may have either sign and zero
/// entries stay zero. Returns the updated factor.
DenseMatrix mu_step(const ConstMatrixRef& a_eff, const ConstMatrixRef& x, const ConstMatrixRef& y, Side side);

struct NmfOptions {
  CompressionConfig config;  // config.rank is the factorization rank
  NmfMethod method = NmfMethod::mu;
  Compression compression = Compression::structured;
  int max_iter = 500;
  double tol = 1e-5;  // relative objective change
  std::uint64_t seed = 0;
  std::optional<DenseMatrix> initial_x;  // default U[0,1] from the seed
  std::optional<DenseMatrix> initial_y;
  Resources resources = Resources::from_env();
};

/// Alternating NMF in the uncompressed, Gaussian-compressed or
/// structured-compressed setting.
///
/// Compressed runs build L (m x s) and R (s x n) once, then alternate an X
/// step against A Rᵀ with design Y Rᵀ and a Y step against LᵀA with design
/// LᵀX. The step is a multiplicative update (mu) or an exact NNLS solve
/// (activeset). Stops on relative objective change < tol or max_iter.
FactorPair nmf_alternating(const MatrixStore& a, const NmfOptions& opts);

/// Variables of the ADMM iteration for the doubly compressed problem.
struct AdmmState {
  DenseMatrix x_tilde;  // s x r
  DenseMatrix y_tilde;  // r x s
  DenseMatrix u;        // m x r
  DenseMatrix v;        // r x n
  DenseMatrix lambda_mult;  // m x r
  DenseMatrix phi_mult;     // r x n
};

struct AdmmParams {
  double lambda = 1.0;
  double phi = 1.0;
  double xi = 1.0;
};

/// Residuals of the six KKT conditions, Frobenius norms:
///  (a) (X̃Ỹ − Ã)Ỹᵀ + LᵀΛ      (b) X̃ᵀ(X̃Ỹ − Ã) + ΦRᵀ
///  (c) LX̃ − U                 (d) ỸR − V
///  (e) ‖Λ∘U‖ + ‖max(Λ,0)‖ + ‖min(U,0)‖   (f) same for Φ, V
struct KktResidual {
  double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;
  double max() const;
};

KktResidual kkt_residual(const AdmmState& state, const ConstMatrixRef& a_tilde, const ConstMatrixRef& l,
                         const ConstMatrixRef& r);

/// ADMM on min ‖Ã − X̃Ỹ‖ s.t. U = LX̃, V = ỸR, U, V >= 0 with explicit bases.
///
/// Multipliers start at zero and Ỹ at V₀Rᵀ. Each step() applies the
/// closed-form X̃, Ỹ, U, V and multiplier updates in that order.
class AdmmSolver {
 public:
  AdmmSolver(DenseMatrix a_tilde, DenseMatrix l, DenseMatrix r, DenseMatrix u0, DenseMatrix v0, AdmmParams params);

  void step();
  const AdmmState& state() const { return state_; }
  KktResidual kkt() const { return kkt_residual(state_, a_tilde_, l_, r_); }

 private:
  DenseMatrix a_tilde_;
  DenseMatrix l_;
  DenseMatrix r_;
  AdmmParams params_;
  AdmmState state_;
};

/// ADMM on min ‖A − XY‖ s.t. U = X, V = Y, U, V >= 0, with no bases at all.
/// Produces the same iterates as AdmmSolver with L = I and R = I.
class UncompressedAdmmSolver {
 public:
  UncompressedAdmmSolver(DenseMatrix a, DenseMatrix u0, DenseMatrix v0, AdmmParams params);

  void step();
  const AdmmState& state() const { return state_; }
  KktResidual kkt() const;

 private:
  DenseMatrix a_;
  AdmmParams params_;
  AdmmState state_;
};

struct AdmmOptions {
  CompressionConfig config;  // config.rank is the factorization rank
  bool compressed = true;
  AdmmParams params;
  int max_iter = 500;
  double tol = 1e-4;  // on the max KKT residual
  std::uint64_t seed = 0;
  Resources resources = Resources::from_env();
};

/// Runs ADMM until the max KKT residual drops below tol or max_iter. The
/// returned factors are X = U, Y = V. Throws DivergenceError when the
/// residual grows tenfold over 50 iterations.
FactorPair nmf_admm(const MatrixStore& a, const AdmmOptions& opts);

/// ‖A − XY‖_F / ‖A‖_F, one row block of A at a time.
double relative_error(const MatrixStore& a, const ConstMatrixRef& x, const ConstMatrixRef& y);

}  // namespace cnmf
