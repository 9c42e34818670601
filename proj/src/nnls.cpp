#include "cnmf/nnls.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace cnmf {
namespace {

// Solves G_PP z = b_P on the passive set; falls back to a ridge when the
// passive Gram block is not numerically positive definite.
Vector solve_passive(const ConstMatrixRef& gram, const Vector& b, const std::vector<Index>& passive) {
  const auto p = static_cast<Index>(passive.size());
  Eigen::MatrixXd g(p, p);
  Vector rhs(p);
  for (Index i = 0; i < p; ++i) {
    rhs(i) = b(passive[i]);
    for (Index j = 0; j < p; ++j) g(i, j) = gram(passive[i], passive[j]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() == Eigen::Success) {
    Vector z = llt.solve(rhs);
    if (z.allFinite()) return z;
  }
  const double ridge = 1e-12 * std::max(g.trace(), 1e-300);
  g.diagonal().array() += ridge;
  Vector z = g.ldlt().solve(rhs);
  if (!z.allFinite()) throw NumericError("nnls: passive-set system is singular even after ridge");
  return z;
}

Vector solve_column(const ConstMatrixRef& gram, const Vector& b, const NnlsOptions& opts, Index column) {
  const Index q = gram.rows();
  const double tol = opts.tol * std::max(1.0, b.cwiseAbs().maxCoeff());
  const Index cap = std::max<Index>(1, opts.exchange_factor * q);

  Vector x = Vector::Zero(q);
  std::vector<bool> passive(static_cast<std::size_t>(q), false);
  std::vector<bool> blocked(static_cast<std::size_t>(q), false);
  Vector w = b;
  Index exchanges = 0;
  std::vector<Index> pset;

  while (true) {
    Index best = -1;
    double best_w = tol;
    for (Index i = 0; i < q; ++i) {
      if (!passive[i] && !blocked[i] && w(i) > best_w) {
        best_w = w(i);
        best = i;
      }
    }
    if (best < 0) break;
    if (++exchanges > cap) {
      DenseMatrix iterate = x;
      throw ConvergenceError("nnls: column " + std::to_string(column) + " exceeded " + std::to_string(cap) +
                                 " active-set exchanges",
                             iterate);
    }
    passive[best] = true;
    const Vector x_before = x;

    while (true) {
      pset.clear();
      for (Index i = 0; i < q; ++i) {
        if (passive[i]) pset.push_back(i);
      }
      if (pset.empty()) break;
      const Vector zp = solve_passive(gram, b, pset);
      bool feasible = true;
      for (Index i = 0; i < zp.size(); ++i) feasible = feasible && zp(i) > 0.0;
      if (feasible) {
        x.setZero();
        for (std::size_t i = 0; i < pset.size(); ++i) x(pset[i]) = zp(static_cast<Index>(i));
        break;
      }
      // Step from x toward z until the first passive variable hits zero.
      double alpha = 1.0;
      Index blocking = -1;
      for (std::size_t i = 0; i < pset.size(); ++i) {
        const double zi = zp(static_cast<Index>(i));
        if (zi <= 0.0) {
          const double xi = x(pset[i]);
          const double denom = xi - zi;
          const double step = denom > 0.0 ? xi / denom : 0.0;
          if (blocking < 0 || step < alpha) {
            alpha = step;
            blocking = pset[i];
          }
        }
      }
      for (std::size_t i = 0; i < pset.size(); ++i) {
        const Index k = pset[i];
        x(k) += alpha * (zp(static_cast<Index>(i)) - x(k));
      }
      x(blocking) = 0.0;
      for (const Index k : pset) {
        if (x(k) <= 0.0) {
          x(k) = 0.0;
          passive[k] = false;
        }
      }
    }

    // A candidate that re-enters and leaves without moving x is degenerate;
    // skip it until the iterate changes.
    if (!passive[best] && x == x_before) {
      blocked[best] = true;
    } else {
      std::fill(blocked.begin(), blocked.end(), false);
    }
    w = b - gram * x;
  }
  return x;
}

}  // namespace

DenseMatrix nnls_solve_gram(const ConstMatrixRef& gram, const ConstMatrixRef& ctd, const NnlsOptions& opts) {
  if (gram.rows() != gram.cols() || gram.rows() != ctd.rows()) throw ArgumentError("nnls: inconsistent Gram shapes");
  if (!(opts.tol > 0.0)) throw ArgumentError("nnls: tol must be > 0");
  require_finite(gram, "nnls Gram matrix");
  require_finite(ctd, "nnls right-hand side");
  DenseMatrix h(gram.rows(), ctd.cols());
  for (Index j = 0; j < ctd.cols(); ++j) {
    const Vector b = ctd.col(j);
    try {
      h.col(j) = solve_column(gram, b, opts, j);
    } catch (const ConvergenceError& e) {
      h.col(j) = e.best_iterate().col(0);
      for (Index k = j + 1; k < h.cols(); ++k) h.col(k).setZero();
      throw ConvergenceError(e.what(), h);
    }
  }
  return h;
}

DenseMatrix nnls_solve(const ConstMatrixRef& c, const ConstMatrixRef& d, const NnlsOptions& opts) {
  if (c.rows() < 1 || c.cols() < 1) throw ArgumentError("nnls: design matrix must be non-empty");
  if (c.rows() != d.rows()) throw ArgumentError("nnls: design and target row counts differ");
  const DenseMatrix gram = c.transpose() * c;
  const DenseMatrix ctd = c.transpose() * d;
  return nnls_solve_gram(gram, ctd, opts);
}

double nnls_kkt_violation(const ConstMatrixRef& c, const ConstMatrixRef& d, const ConstMatrixRef& h) {
  const DenseMatrix gram = c.transpose() * c;
  const DenseMatrix ctd = c.transpose() * d;
  const DenseMatrix grad = gram * h - ctd;
  double worst = 0.0;
  for (Index j = 0; j < h.cols(); ++j) {
    const double scale = std::max(1.0, ctd.col(j).cwiseAbs().maxCoeff());
    for (Index i = 0; i < h.rows(); ++i) {
      const double v = h(i, j);
      const double g = grad(i, j) / scale;
      if (v < 0.0) {
        worst = std::max(worst, -v);
      } else if (v == 0.0) {
        worst = std::max(worst, -g);
      } else {
        worst = std::max(worst, std::abs(g));
      }
    }
  }
  return worst;
}

}  // namespace cnmf
