#pragma once

// Dense phase-1 primal simplex with Bland's rule: decides feasibility of
// { A x = b, x >= 0 } by minimizing the sum of artificial variables, and
// exposes the final basis plus the dual vector so callers can extract a
// Farkas certificate when the optimum is positive.

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mbeta/errors.hpp"

namespace mbeta {

struct Phase1Result {
  bool feasible = false;
  double objective = 0.0;      // optimal sum of artificials
  Eigen::VectorXd x;           // structural solution, valid when feasible
  Eigen::VectorXd y;           // simplex dual w.r.t. the original rows
  std::vector<int> basis;      // final basis columns; artificial i is column n + i
  std::vector<int> row_sign;   // +1/-1 applied to row i to make the rhs nonnegative
  long iterations = 0;
};

// feas_tol is the threshold on the phase-1 optimum below which the system is
// declared feasible.
inline Phase1Result phase1_simplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                   double feas_tol) {
  const Eigen::Index rows = A.rows(), n = A.cols();
  require(b.size() == rows, errc::length_mismatch, "phase-1 rhs size mismatch");
  const double pivot_tol = 1e-11;

  Phase1Result res;
  res.row_sign.resize(static_cast<std::size_t>(rows));

  // Tableau [A' | I | b'] with rows flipped so b' >= 0; artificial basis.
  Eigen::MatrixXd T(rows, n + rows + 1);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int s = (b(i) >= 0.0) ? 1 : -1;
    res.row_sign[static_cast<std::size_t>(i)] = s;
    T.row(i).head(n) = s * A.row(i);
    T.row(i).segment(n, rows).setZero();
    T(i, n + i) = 1.0;
    T(i, n + rows) = s * b(i);
  }
  res.basis.resize(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i) res.basis[static_cast<std::size_t>(i)] = static_cast<int>(n + i);

  // Reduced cost row for cost (0,...,0 | 1,...,1); rhs entry carries -objective.
  Eigen::VectorXd red = Eigen::VectorXd::Zero(n + rows + 1);
  for (Eigen::Index j = 0; j < n + rows + 1; ++j) {
    double colsum = T.col(j).sum();
    red(j) = (j >= n && j < n + rows ? 1.0 : 0.0) - colsum;
  }

  const long max_iter = 200 * static_cast<long>(n + rows) + 1000;
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    // Bland: entering = smallest column index with negative reduced cost.
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + rows; ++j)
      if (red(j) < -pivot_tol) { enter = j; break; }
    if (enter < 0) break;

    // Ratio test; ties resolved toward the smallest basic variable index.
    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (T(i, enter) <= pivot_tol) continue;
      const double ratio = T(i, n + rows) / T(i, enter);
      if (leave < 0 || ratio < best - 1e-14 ||
          (ratio < best + 1e-14 &&
           res.basis[static_cast<std::size_t>(i)] < res.basis[static_cast<std::size_t>(leave)])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave < 0)
      fail(errc::numerical_failure, "phase-1 simplex detected an unbounded direction");

    const double piv = T(leave, enter);
    T.row(leave) /= piv;
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (i == leave) continue;
      const double f = T(i, enter);
      if (f != 0.0) T.row(i) -= f * T.row(leave);
    }
    const double fr = red(enter);
    if (fr != 0.0) red -= fr * T.row(leave).transpose();
    res.basis[static_cast<std::size_t>(leave)] = static_cast<int>(enter);
  }
  if (res.iterations >= max_iter)
    fail(errc::numerical_failure, "phase-1 simplex exceeded the iteration cap");

  res.objective = -red(n + rows);
  if (res.objective < 0.0 && res.objective > -1e-9) res.objective = 0.0;
  res.feasible = res.objective <= feas_tol;

  res.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int col = res.basis[static_cast<std::size_t>(i)];
    if (col < n) res.x(col) = std::max(0.0, T(i, n + rows));
  }

  // Dual from artificial reduced costs: y'_i = 1 - red(artificial i), then undo
  // the row flips for the original system.
  res.y.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i)
    res.y(i) = res.row_sign[static_cast<std::size_t>(i)] * (1.0 - red(n + i));
  return res;
}

}  // namespace mbeta
