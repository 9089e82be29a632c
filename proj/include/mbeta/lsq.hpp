#pragma once

// Primal active-set solver for ridge-regularized least squares with equality
// constraints and nonnegativity bounds:
//
//   min ||A x - b||^2 + ridge^2 ||x - g||^2   s.t.   E x = e,  x >= 0.
//
// A has few rows (the pairwise-moment block) while x can have 2^m entries, so
// each equality-eliminated subproblem is solved through a thin SVD of A
// restricted to the null space of the active equality system; Householder
// sequences are applied lazily and nothing of size |F| x |F| is ever formed.
// Requires a feasible starting point; ridge > 0 keeps every subproblem
// strictly convex.

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <string>
#include <vector>

#include "mbeta/errors.hpp"

namespace mbeta {

struct ActiveSetResult {
  Eigen::VectorXd x;
  std::vector<int> active;  // indices clamped at the lower bound
  long iterations = 0;
};

namespace detail {

// Minimize ||A_F z - b||^2 + ridge^2 ||z - g_F||^2 subject to E_F z = e over
// the free coordinates F. The equality system is consistent because the
// caller maintains a feasible iterate.
inline Eigen::VectorXd ridge_equality_ls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                         double ridge, const Eigen::VectorXd& g,
                                         const Eigen::MatrixXd& E, const Eigen::VectorXd& e,
                                         const std::vector<int>& free_idx) {
  const auto nf = static_cast<Eigen::Index>(free_idx.size());
  const Eigen::Index p = E.rows();
  const Eigen::Index t = A.rows();

  Eigen::MatrixXd EfT(nf, p);
  Eigen::MatrixXd AfT(nf, t);
  Eigen::VectorXd gf(nf);
  for (Eigen::Index i = 0; i < nf; ++i) {
    const int k = free_idx[static_cast<std::size_t>(i)];
    EfT.row(i) = E.col(k).transpose();
    if (t > 0) AfT.row(i) = A.col(k).transpose();
    gf(i) = g(k);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(EfT);
  const Eigen::Index rk = qr.rank();
  const auto Qseq = qr.householderQ();

  // Particular solution of E_F z = e in the rotated frame: R1^T u1 = (P^T e).
  const Eigen::VectorXd ep = qr.colsPermutation().transpose() * e;
  Eigen::MatrixXd R1 = qr.matrixR().topLeftCorner(rk, rk);
  const Eigen::VectorXd u1 =
      R1.transpose().triangularView<Eigen::Lower>().solve(ep.head(rk));

  // Rotated uniform target; its tail is the ridge anchor for u2.
  Eigen::VectorXd v = Qseq.transpose() * gf;  // length nf
  const Eigen::Index nf2 = nf - rk;
  Eigen::VectorXd u(nf);
  u.head(rk) = u1;
  if (nf2 > 0) {
    Eigen::VectorXd u2 = v.tail(nf2);  // ridge-only solution
    if (t > 0) {
      // A_F Q2 in rotated coordinates, then the explicit ridge-SVD solve:
      // d = V diag(s/(s^2+ridge^2)) U^T r with r the residual at u2 = anchor.
      Eigen::MatrixXd W = Qseq.transpose() * AfT;  // nf x t
      const Eigen::MatrixXd Ared = W.bottomRows(nf2).transpose();  // t x nf2
      Eigen::VectorXd zpart(nf);
      zpart.head(rk) = u1;
      zpart.tail(nf2) = u2;
      const Eigen::VectorXd r = b - AfT.transpose() * (Qseq * zpart).eval();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ared, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Eigen::VectorXd& s = svd.singularValues();
      Eigen::VectorXd coef = svd.matrixU().transpose() * r;
      for (Eigen::Index i = 0; i < s.size(); ++i)
        coef(i) *= s(i) / (s(i) * s(i) + ridge * ridge);
      u2 += svd.matrixV() * coef;
    }
    u.tail(nf2) = u2;
  }
  return Qseq * u;
}

}  // namespace detail

inline ActiveSetResult ridge_constrained_lsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                             double ridge, const Eigen::VectorXd& g,
                                             const Eigen::MatrixXd& E, const Eigen::VectorXd& e,
                                             Eigen::VectorXd x0, double zero_tol = 1e-12,
                                             double mult_tol = 1e-10) {
  const Eigen::Index n = E.cols();
  require(g.size() == n && x0.size() == n && (A.rows() == 0 || A.cols() == n),
          errc::length_mismatch, "ridge_constrained_lsq dimension mismatch");
  require(ridge > 0.0, errc::domain_error, "ridge must be positive");

  std::vector<bool> active(static_cast<std::size_t>(n), false);
  for (Eigen::Index k = 0; k < n; ++k)
    if (x0(k) <= zero_tol) { active[static_cast<std::size_t>(k)] = true; x0(k) = 0.0; }

  Eigen::VectorXd x = x0;
  const long max_iter = 3 * static_cast<long>(n) + 200;
  ActiveSetResult res;
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    std::vector<int> free_idx;
    for (Eigen::Index k = 0; k < n; ++k)
      if (!active[static_cast<std::size_t>(k)]) free_idx.push_back(static_cast<int>(k));

    Eigen::VectorXd z;
    if (!free_idx.empty()) z = detail::ridge_equality_ls(A, b, ridge, g, E, e, free_idx);

    bool interior = true;
    for (std::size_t i = 0; i < free_idx.size(); ++i)
      if (z(static_cast<Eigen::Index>(i)) < -zero_tol) { interior = false; break; }

    if (interior) {
      for (std::size_t i = 0; i < free_idx.size(); ++i)
        x(free_idx[i]) = std::max(0.0, z(static_cast<Eigen::Index>(i)));

      // KKT: grad + E^T mu = lambda with lambda_F = 0, lambda_W >= 0.
      Eigen::VectorXd grad = ridge * ridge * (x - g);
      if (A.rows() > 0) grad += A.transpose() * (A * x - b);
      Eigen::VectorXd mu;
      if (!free_idx.empty()) {
        Eigen::MatrixXd EfT(static_cast<Eigen::Index>(free_idx.size()), E.rows());
        Eigen::VectorXd gf(static_cast<Eigen::Index>(free_idx.size()));
        for (std::size_t i = 0; i < free_idx.size(); ++i) {
          EfT.row(static_cast<Eigen::Index>(i)) = E.col(free_idx[i]).transpose();
          gf(static_cast<Eigen::Index>(i)) = grad(free_idx[i]);
        }
        mu = EfT.colPivHouseholderQr().solve(-gf);
      } else {
        mu = (E * E.transpose()).ldlt().solve(-E * grad);
      }
      const double scale = 1.0 + grad.cwiseAbs().maxCoeff();
      int worst = -1;
      double worst_val = -mult_tol * scale;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (!active[static_cast<std::size_t>(k)]) continue;
        const double lambda = grad(k) + E.col(k).dot(mu);
        if (lambda < worst_val) { worst_val = lambda; worst = static_cast<int>(k); }
      }
      if (worst < 0) break;  // KKT satisfied
      active[static_cast<std::size_t>(worst)] = false;
      continue;
    }

    // Blocked: step from x toward z until the first free variable hits 0.
    double step = 1.0;
    int blocker = -1;
    for (std::size_t i = 0; i < free_idx.size(); ++i) {
      const double zi = z(static_cast<Eigen::Index>(i));
      const double xi = x(free_idx[i]);
      if (zi < 0.0 && zi < xi) {
        const double a = xi / (xi - zi);
        if (a < step) { step = a; blocker = free_idx[i]; }
      }
    }
    if (blocker < 0)
      fail(errc::numerical_failure, "active-set step found no blocking bound");
    for (std::size_t i = 0; i < free_idx.size(); ++i) {
      const Eigen::Index k = free_idx[i];
      x(k) = std::max(0.0, x(k) + step * (z(static_cast<Eigen::Index>(i)) - x(k)));
    }
    x(blocker) = 0.0;
    active[static_cast<std::size_t>(blocker)] = true;
  }
  if (res.iterations >= max_iter)
    fail(errc::numerical_failure, "active-set solver exceeded the iteration cap");

  res.x = x;
  for (Eigen::Index k = 0; k < n; ++k)
    if (active[static_cast<std::size_t>(k)]) res.active.push_back(static_cast<int>(k));
  return res;
}

}  // namespace mbeta
