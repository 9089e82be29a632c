#pragma once

// Translation of a reduced parametrisation (nu, A) into a full parameter
// vector gamma: the constrained least-squares problem
//
//   min ||H2 gamma - alpha2||^2   s.t.   H gamma = alpha,  1^T gamma = nu,
//                                        gamma >= 0,
//
// solved by the active-set method in lsq.hpp. First-order moments are matched
// exactly; mixed second-order moments as closely as possible. Among exact
// minimizers, ties are broken toward the uniform vector 1_w nu / w: stage 1
// carries a small regularization pull toward uniform, stage 2 re-minimizes the
// distance to uniform exactly on the fitted face.

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/QR>
#include <cmath>
#include <string>

#include "mbeta/binmap.hpp"
#include "mbeta/errors.hpp"
#include "mbeta/lsq.hpp"
#include "mbeta/mbeta.hpp"
#include "mbeta/simplex.hpp"

namespace mbeta {

struct LseiProblem {
  Eigen::MatrixXd C;  // pairwise-moment rows H2
  Eigen::VectorXd c;  // alpha^(2)
  Eigen::MatrixXd E;  // [H; 1^T]
  Eigen::VectorXd e;  // (alpha, nu)
};

struct FitResult {
  Eigen::VectorXd gamma;
  double residual = 0.0;  // value of ||C gamma - c||^2 at the solution
  bool exact = false;
  bool tie_break_applied = false;
};

inline LseiProblem make_lsei_problem(const MBetaReduced& red, const HBasis& basis) {
  require(red.m == basis.m, errc::length_mismatch, "reduced form and basis dimension differ");
  LseiProblem p;
  const auto w = static_cast<Eigen::Index>(basis.w);
  p.C = basis.H2;
  p.c.resize(basis.n_pairs());
  int idx = 0;
  for (int j = 0; j < red.m; ++j)
    for (int jp = j + 1; jp < red.m; ++jp) p.c(idx++) = red.A(j, jp);
  p.E.resize(red.m + 1, w);
  p.E.topRows(red.m) = basis.H;
  p.E.bottomRows(1).setOnes();
  p.e.resize(red.m + 1);
  p.e.head(red.m) = red.A.diagonal();
  p.e(red.m) = red.nu;
  return p;
}

namespace detail {

// Whether { F gamma = f, gamma >= 0 } has gamma* as its only point: the cone
// of feasible directions { d : F d = 0, d_k >= 0 for active k } must be {0}.
// Reduces to a rank test on the kernel of F restricted to the active rows,
// with a small phase-1 LP for the remaining pointed-cone case.
inline bool face_is_singleton(const Eigen::MatrixXd& F, const Eigen::VectorXd& gamma,
                              double zero_tol) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(F);
  const Eigen::MatrixXd N = lu.kernel();  // w x q
  const Eigen::Index q = lu.dimensionOfKernel();
  if (q == 0) return true;
  std::vector<Eigen::Index> active;
  for (Eigen::Index k = 0; k < gamma.size(); ++k)
    if (gamma(k) <= zero_tol) active.push_back(k);
  if (active.empty()) return false;  // interior null direction exists
  Eigen::MatrixXd A(static_cast<Eigen::Index>(active.size()), q);
  for (std::size_t i = 0; i < active.size(); ++i)
    A.row(static_cast<Eigen::Index>(i)) = N.row(active[i]);
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(A).rank() < q)
    return false;  // direction with A v = 0
  // Nontrivial ray iff { A v >= 0, 1^T A v = 1 } is feasible (v free):
  // v = v+ - v-, slack s >= 0 turns it into an equality phase-1 problem.
  const Eigen::Index rows = A.rows() + 1, cols = 2 * q + A.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, cols);
  M.topLeftCorner(A.rows(), q) = A;
  M.block(0, q, A.rows(), q) = -A;
  M.block(0, 2 * q, A.rows(), A.rows()) = -Eigen::MatrixXd::Identity(A.rows(), A.rows());
  M.bottomLeftCorner(1, q) = A.colwise().sum();
  M.block(rows - 1, q, 1, q) = -A.colwise().sum();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
  b(rows - 1) = 1.0;
  return !phase1_simplex(M, b, 1e-9).feasible;
}

// Interior feasible point of { E gamma = e, gamma >= 0 } for the marginal
// system: the product-Bernoulli cell masses nu * prod_j (alpha_j/nu)^{x_j}
// (1 - alpha_j/nu)^{1-x_j}, which matches all first-order moments.
inline Eigen::VectorXd product_start(const Eigen::MatrixXd& E, const Eigen::VectorXd& e) {
  const Eigen::Index m = E.rows() - 1;
  const Eigen::Index w = E.cols();
  const double nu = e(m);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(w, nu);
  for (Eigen::Index k = 0; k < w; ++k)
    for (Eigen::Index j = 0; j < m; ++j) {
      const double pj = e(j) / nu;
      x(k) *= (E(j, k) != 0.0) ? pj : (1.0 - pj);
    }
  return x;
}

}  // namespace detail

inline FitResult solve_lsei(const LseiProblem& prob) {
  const Eigen::Index w = prob.E.cols();
  require(prob.C.cols() == w, errc::length_mismatch, "objective/equality column mismatch");
  require(prob.e.size() == prob.E.rows() && prob.c.size() == prob.C.rows(),
          errc::length_mismatch, "target length mismatch");
  const double nu = prob.e(prob.e.size() - 1);
  require(nu > 0.0, errc::domain_error, "total concentration must be positive");

  // Equality feasibility via the phase-1 LP on the marginal block.
  const Phase1Result lp = phase1_simplex(prob.E, prob.e, 1e-9 * (1.0 + nu));
  if (!lp.feasible)
    fail(errc::equality_infeasible,
         "no gamma >= 0 matches the requested first-order moments");

  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(w, nu / static_cast<double>(w));
  Eigen::VectorXd start = detail::product_start(prob.E, prob.e);
  if (!(start.array() >= 0.0).all() || (prob.E * start - prob.e).cwiseAbs().maxCoeff() >
                                           1e-9 * (1.0 + nu))
    start = lp.x;

  // Stage 1: residual minimization. The small ridge toward the uniform vector
  // keeps every subproblem strictly convex and pins null-space components at
  // the uniform anchor; it disturbs the residual by at most
  // delta^2 ||gamma - uniform||^2, far below the exactness tolerance.
  const double delta =
      std::sqrt(1e-10 * (1.0 + prob.c.squaredNorm()) / (1.0 + nu * nu));
  const ActiveSetResult stage1 =
      ridge_constrained_lsq(prob.C, prob.c, delta, uniform, prob.E, prob.e, start);

  // Stage 2: exact tie-break. On the face { C gamma = C gamma1 } the residual
  // is pinned; minimize the distance to the uniform vector there.
  const Eigen::VectorXd fitted = prob.C * stage1.x;
  Eigen::MatrixXd E2(prob.E.rows() + prob.C.rows(), w);
  E2.topRows(prob.E.rows()) = prob.E;
  E2.bottomRows(prob.C.rows()) = prob.C;
  Eigen::VectorXd e2(prob.e.size() + fitted.size());
  e2.head(prob.e.size()) = prob.e;
  e2.tail(fitted.size()) = fitted;
  const ActiveSetResult stage2 = ridge_constrained_lsq(
      Eigen::MatrixXd(0, w), Eigen::VectorXd(0), 1.0, uniform, E2, e2, stage1.x);

  FitResult out;
  out.gamma = stage2.x.cwiseMax(0.0);
  out.residual = (prob.C * out.gamma - prob.c).squaredNorm();
  out.exact = out.residual <= 1e-8 * (1.0 + prob.c.squaredNorm());
  // The tie-break mattered iff the residual-optimal face is not a singleton.
  out.tie_break_applied = !detail::face_is_singleton(E2, out.gamma, 1e-9 * (1.0 + nu));

  if ((prob.E * out.gamma - prob.e).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + nu))
    fail(errc::numerical_failure, "equality constraints not met at the fitted solution");
  return out;
}

inline FitResult fit_gamma(const MBetaReduced& red, const HBasis& basis,
                           int m_max = default_m_max) {
  require(red.m <= m_max, errc::dimension_too_large,
          "fitting the full parameter vector requires m <= " + std::to_string(m_max));
  return solve_lsei(make_lsei_problem(red, basis));
}

}  // namespace mbeta
