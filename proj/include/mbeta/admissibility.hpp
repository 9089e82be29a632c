#pragma once

// Realizability checks for a reduced parametrisation (nu, A): derived moment
// matrix from (nu, mu, R), the necessary moment/Frechet bounds, pairwise
// correlation bounds, and the exact feasibility test of the moment system
// Htilde gamma = alpha_tilde, gamma >= 0, with Farkas certificates on failure.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mbeta/binmap.hpp"
#include "mbeta/errors.hpp"
#include "mbeta/mbeta.hpp"
#include "mbeta/simplex.hpp"

namespace mbeta {

inline constexpr int default_max_full_dim = 10;

struct MomentTarget {
  double nu = 0.0;
  Eigen::VectorXd mu;
  Eigen::MatrixXd R;
};

inline void validate_target(const MomentTarget& t) {
  require(t.nu > 0.0, errc::domain_error, "nu must be positive");
  require(t.mu.size() >= 1, errc::domain_error, "mu must be nonempty");
  require((t.mu.array() > 0.0).all() && (t.mu.array() < 1.0).all(), errc::domain_error,
          "mu components must lie strictly inside (0,1)");
  const auto m = t.mu.size();
  require(t.R.rows() == m && t.R.cols() == m, errc::length_mismatch, "R must be m x m");
  require((t.R - t.R.transpose()).cwiseAbs().maxCoeff() <= 1e-12, errc::invalid_correlation,
          "R must be symmetric");
  require((t.R.diagonal().array() - 1.0).abs().maxCoeff() <= 1e-12, errc::invalid_correlation,
          "R must have unit diagonal");
  Eigen::LLT<Eigen::MatrixXd> llt(t.R);
  require(llt.info() == Eigen::Success, errc::invalid_correlation,
          "R is not positive definite");
}

// A(nu, mu, R) = nu((nu+1) Sigma + mu mu^T) with Sigma = V^{1/2} R V^{1/2} and
// V = diag(mu (1-mu))/(nu+1), so that diag(A) = nu mu exactly.
inline MBetaReduced derive_moment_matrix(const MomentTarget& t) {
  validate_target(t);
  const auto m = t.mu.size();
  const Eigen::VectorXd v = t.mu.array() * (1.0 - t.mu.array()) / (t.nu + 1.0);
  const Eigen::VectorXd s = v.cwiseSqrt();
  MBetaReduced red;
  red.m = static_cast<int>(m);
  red.nu = t.nu;
  red.A = t.nu * ((t.nu + 1.0) * (s.asDiagonal() * t.R * s.asDiagonal()).eval() +
                  t.mu * t.mu.transpose());
  red.A.diagonal() = t.nu * t.mu;
  return red;
}

struct FrechetResult {
  Eigen::MatrixXd lower;  // A^- = max(0, R_A + C_A - nu)
  Eigen::MatrixXd upper;  // A^+ = min(R_A, C_A)
  bool ok = true;
  std::vector<std::pair<int, int>> violations;  // 1-based (j, j'), j <= j'
};

inline FrechetResult frechet_bounds(const MBetaReduced& red) {
  const int m = red.m;
  const Eigen::VectorXd alpha = red.A.diagonal();
  FrechetResult out;
  out.lower.resize(m, m);
  out.upper.resize(m, m);
  const double slack = 1e-9 * (1.0 + red.nu);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      out.lower(i, j) = std::max(0.0, alpha(i) + alpha(j) - red.nu);
      out.upper(i, j) = std::min(alpha(i), alpha(j));
    }
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j)
      if (red.A(i, j) < out.lower(i, j) - slack || red.A(i, j) > out.upper(i, j) + slack) {
        out.ok = false;
        out.violations.emplace_back(i + 1, j + 1);
      }
  return out;
}

struct MomentBoundsResult {
  bool ok = true;
  std::vector<std::vector<int>> violations;  // violating subsets J, 1-based indices
};

// Checks nu >= sum_{j in J} alpha_j - sum_{j != j' in J} alpha_{jj'} over all
// subsets J (the off-diagonal sum counts ordered pairs, i.e. twice each pair).
inline MomentBoundsResult moment_bounds(const MBetaReduced& red, int m_max = default_m_max) {
  require(red.m <= m_max, errc::dimension_too_large,
          "subset enumeration requires m <= " + std::to_string(m_max));
  const int m = red.m;
  const Eigen::VectorXd alpha = red.A.diagonal();
  const double slack = 1e-9 * (1.0 + red.nu);
  MomentBoundsResult out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) {
      if (!((mask >> j) & 1u)) continue;
      s += alpha(j);
      for (int jp = j + 1; jp < m; ++jp)
        if ((mask >> jp) & 1u) s -= 2.0 * red.A(j, jp);
    }
    if (red.nu < s - slack) {
      out.ok = false;
      std::vector<int> J;
      for (int j = 0; j < m; ++j)
        if ((mask >> j) & 1u) J.push_back(j + 1);
      out.violations.push_back(std::move(J));
    }
  }
  return out;
}

// Attainable correlation range for a pair of Bernoulli margins:
// max(-1/(psi_j psi_k), -psi_j psi_k) <= rho <= min(psi_j/psi_k, psi_k/psi_j)
// with psi = sqrt(mu/(1-mu)).
inline std::pair<double, double> pairwise_correlation_bounds(double mu_j, double mu_k) {
  require(mu_j > 0.0 && mu_j < 1.0 && mu_k > 0.0 && mu_k < 1.0, errc::domain_error,
          "means must lie in (0,1)");
  const double pj = std::sqrt(mu_j / (1.0 - mu_j));
  const double pk = std::sqrt(mu_k / (1.0 - mu_k));
  const double lo = std::max(-1.0 / (pj * pk), -pj * pk);
  const double hi = std::min(pj / pk, pk / pj);
  return {lo, hi};
}

enum class Feasibility { feasible, infeasible };

struct FeasibilityResult {
  Feasibility status = Feasibility::infeasible;
  std::optional<Eigen::VectorXd> witness;      // gamma with Htilde gamma = alpha_tilde
  std::optional<Eigen::VectorXd> certificate;  // b with Htilde^T b >= 0, b^T alpha_tilde < 0
  bool certificate_exact = false;              // certificate passed the exact rational check
};

namespace detail {

using bigrat = boost::multiprecision::cpp_rational;

// Rational reconstruction of the value a double most plausibly represents:
// continued fractions with a denominator cap, falling back to the exact
// dyadic value of the double.
inline bigrat rationalize(double v, long long max_den = (1LL << 26)) {
  if (!std::isfinite(v) || v == 0.0) return bigrat(0);
  const double av = std::fabs(v);
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double x = av;
  for (int it = 0; it < 64; ++it) {
    const double fl = std::floor(x);
    if (fl > 4e18) break;
    const long long a = static_cast<long long>(fl);
    const __int128 p2 = static_cast<__int128>(a) * p1 + p0;
    const __int128 q2 = static_cast<__int128>(a) * q1 + q0;
    if (q2 > max_den || p2 > static_cast<__int128>(4e18)) break;
    p0 = p1; q0 = q1;
    p1 = static_cast<long long>(p2); q1 = static_cast<long long>(q2);
    const double approx = static_cast<double>(p1) / static_cast<double>(q1);
    if (std::fabs(approx - av) <= 4.0 * std::numeric_limits<double>::epsilon() * av) {
      bigrat r(p1, q1);
      return v < 0 ? -r : r;
    }
    const double rem = x - fl;
    if (rem < 1e-18) break;
    x = 1.0 / rem;
  }
  return bigrat(v);  // exact dyadic value
}

// Exact rational solve of M y = rhs (square), returning false when singular.
inline bool solve_rational(std::vector<std::vector<bigrat>> M, std::vector<bigrat> rhs,
                           std::vector<bigrat>& y) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && M[piv][col] == 0) ++piv;
    if (piv == n) return false;
    std::swap(M[piv], M[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t i = col + 1; i < n; ++i) {
      if (M[i][col] == 0) continue;
      const bigrat f = M[i][col] / M[col][col];
      for (std::size_t j = col; j < n; ++j) M[i][j] -= f * M[col][j];
      rhs[i] -= f * rhs[col];
    }
  }
  y.assign(n, bigrat(0));
  for (std::size_t i = n; i-- > 0;) {
    bigrat s = rhs[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= M[i][j] * y[j];
    y[i] = s / M[i][i];
  }
  return true;
}

}  // namespace detail

// Exact-arithmetic verification of a Farkas certificate on rationalized
// inputs: Htilde^T b >= 0 componentwise and b^T alpha_tilde < 0.
inline bool verify_certificate(const HBasis& basis, const Eigen::VectorXd& alpha_tilde,
                               const Eigen::VectorXd& b) {
  using detail::bigrat;
  const int r = basis.r();
  if (b.size() != r || alpha_tilde.size() != r) return false;
  std::vector<bigrat> br(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) br[static_cast<std::size_t>(i)] = detail::rationalize(b(i));
  for (std::size_t k = 0; k < basis.w; ++k) {
    bigrat s(0);
    for (int i = 0; i < r; ++i)
      if (basis.Htilde(i, static_cast<Eigen::Index>(k)) != 0.0) s += br[static_cast<std::size_t>(i)];
    if (s < 0) return false;
  }
  bigrat dot(0);
  for (int i = 0; i < r; ++i)
    dot += br[static_cast<std::size_t>(i)] * detail::rationalize(alpha_tilde(i));
  return dot < 0;
}

namespace detail {

// Exact dual recomputation from the final phase-1 basis: solves B^T y' = c_B
// over the rationals in the sign-flipped system, then maps back.
inline std::optional<Eigen::VectorXd> exact_farkas_from_basis(const HBasis& basis,
                                                              const Eigen::VectorXd& alpha_tilde,
                                                              const Phase1Result& lp) {
  const int r = basis.r();
  const auto n = static_cast<int>(basis.w);
  std::vector<std::vector<bigrat>> Bt(static_cast<std::size_t>(r),
                                      std::vector<bigrat>(static_cast<std::size_t>(r), bigrat(0)));
  std::vector<bigrat> cB(static_cast<std::size_t>(r), bigrat(0));
  for (int i = 0; i < r; ++i) {
    const int col = lp.basis[static_cast<std::size_t>(i)];
    // Row i of B^T = basis column i of [S*Htilde | I].
    if (col < n) {
      for (int row = 0; row < r; ++row)
        Bt[static_cast<std::size_t>(i)][static_cast<std::size_t>(row)] =
            bigrat(lp.row_sign[static_cast<std::size_t>(row)] *
                   static_cast<int>(basis.Htilde(row, col)));
      cB[static_cast<std::size_t>(i)] = 0;
    } else {
      Bt[static_cast<std::size_t>(i)][static_cast<std::size_t>(col - n)] = 1;
      cB[static_cast<std::size_t>(i)] = 1;
    }
  }
  std::vector<bigrat> yflip;
  if (!solve_rational(std::move(Bt), std::move(cB), yflip)) return std::nullopt;

  // Undo row flips, negate, and scale to unit infinity norm.
  std::vector<bigrat> bvec(static_cast<std::size_t>(r));
  bigrat norm(0);
  for (int i = 0; i < r; ++i) {
    bvec[static_cast<std::size_t>(i)] =
        -bigrat(lp.row_sign[static_cast<std::size_t>(i)]) * yflip[static_cast<std::size_t>(i)];
    bigrat a = abs(bvec[static_cast<std::size_t>(i)]);
    if (a > norm) norm = a;
  }
  if (norm == 0) return std::nullopt;
  Eigen::VectorXd b(r);
  for (int i = 0; i < r; ++i)
    b(i) = static_cast<double>(bvec[static_cast<std::size_t>(i)] / norm);
  // Accept only if the rounded certificate still verifies exactly.
  if (!verify_certificate(basis, alpha_tilde, b)) return std::nullopt;
  return b;
}

}  // namespace detail

// Exact feasibility test of the moment conditions via the phase-1 LP on
// Htilde gamma = alpha_tilde, gamma >= 0. Refuses dimensions beyond
// max_full_dim, mirroring the reduced-parametrisation pipeline where only the
// necessary bounds are checked.
inline FeasibilityResult check_mc(const MBetaReduced& red, const HBasis& basis,
                                  int max_full_dim = default_max_full_dim) {
  require(red.m == basis.m, errc::length_mismatch, "reduced form and basis dimension differ");
  require(red.m <= max_full_dim, errc::dimension_too_large,
          "check_mc requires m <= " + std::to_string(max_full_dim) +
              "; use frechet_bounds for larger dimensions");
  const Eigen::VectorXd at = red.alpha_tilde();
  const double tol = 1e-9 * (1.0 + red.nu);
  const Phase1Result lp = phase1_simplex(basis.Htilde, at, tol);

  FeasibilityResult out;
  if (lp.feasible) {
    out.status = Feasibility::feasible;
    out.witness = lp.x;
    return out;
  }
  out.status = Feasibility::infeasible;
  if (auto exact = detail::exact_farkas_from_basis(basis, at, lp)) {
    out.certificate = *exact;
    out.certificate_exact = true;
  } else {
    Eigen::VectorXd b = -lp.y;
    const double norm = b.cwiseAbs().maxCoeff();
    if (norm > 0.0) b /= norm;
    out.certificate = b;
    out.certificate_exact = verify_certificate(basis, at, b);
  }
  return out;
}

}  // namespace mbeta
