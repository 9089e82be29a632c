#pragma once

// The mBeta distribution in full (gamma over 2^m cells) and reduced (nu, A)
// parametrisation, moment summaries, and the conjugate update rules
// gamma* = gamma + d and (nu*, A*) = (nu + n, A + H diag(d) H^T).

#include <Eigen/Core>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mbeta/binmap.hpp"
#include "mbeta/errors.hpp"

namespace mbeta {

struct MBetaFull {
  std::shared_ptr<const HBasis> basis;
  Eigen::VectorXd gamma;  // length 2^m, entries >= 0, at least one positive

  int m() const { return basis->m; }
  double nu() const { return gamma.sum(); }
};

struct MBetaReduced {
  int m = 0;
  double nu = 0.0;
  Eigen::MatrixXd A;  // m x m symmetric; diag(A) = alpha, off-diagonals alpha_{jj'}

  Eigen::VectorXd alpha() const { return A.diagonal(); }

  // (alpha, alpha^(2), nu) in the pair order (1,2),(1,3),...,(m-1,m).
  Eigen::VectorXd alpha_tilde() const {
    const int r = 1 + m * (m + 1) / 2;
    Eigen::VectorXd at(r);
    at.head(m) = A.diagonal();
    int p = m;
    for (int j = 0; j < m; ++j)
      for (int jp = j + 1; jp < m; ++jp) at(p++) = A(j, jp);
    at(r - 1) = nu;
    return at;
  }
};

struct MomentSummary {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;
  Eigen::MatrixXd R;
  std::vector<std::pair<double, double>> marginal_ab;
};

inline void validate_full(const MBetaFull& full) {
  require(full.basis != nullptr, errc::domain_error, "mBeta parameter lacks a basis");
  require(full.gamma.size() == static_cast<Eigen::Index>(full.basis->w), errc::length_mismatch,
          "gamma length does not equal 2^m");
  require((full.gamma.array() >= 0.0).all(), errc::domain_error, "gamma entries must be >= 0");
  require(full.gamma.sum() > 0.0, errc::all_zero_gamma, "gamma must have a positive entry");
}

inline MBetaFull make_full(std::shared_ptr<const HBasis> basis, Eigen::VectorXd gamma) {
  MBetaFull full{std::move(basis), std::move(gamma)};
  validate_full(full);
  return full;
}

// Vague prior gamma = 1_w * 2/w: independent uniform marginals.
inline MBetaFull vague_full(std::shared_ptr<const HBasis> basis) {
  const auto w = static_cast<Eigen::Index>(basis->w);
  return MBetaFull{std::move(basis), Eigen::VectorXd::Constant(w, 2.0 / static_cast<double>(w))};
}

// Reduced image of the vague prior: nu = 2, diag(A) = 1, off-diagonals 1/2.
inline MBetaReduced vague_reduced(int m) {
  MBetaReduced red;
  red.m = m;
  red.nu = 2.0;
  red.A = Eigen::MatrixXd::Constant(m, m, 0.5);
  red.A.diagonal().setOnes();
  return red;
}

// nu = ||gamma||_1 and A = H diag(gamma) H^T.
inline MBetaReduced moment_matrix(const MBetaFull& full) {
  validate_full(full);
  MBetaReduced red;
  red.m = full.m();
  red.nu = full.gamma.sum();
  red.A = full.basis->H * full.gamma.asDiagonal() * full.basis->H.transpose();
  return red;
}

// Marginal Beta shape pairs (alpha_j, nu - alpha_j).
inline std::vector<std::pair<double, double>> marginal_params(const MBetaReduced& red) {
  std::vector<std::pair<double, double>> ab;
  ab.reserve(red.m);
  for (int j = 0; j < red.m; ++j) {
    const double a = red.A(j, j), b = red.nu - red.A(j, j);
    require(a > 0.0 && b > 0.0, errc::degenerate_marginal,
            "marginal " + std::to_string(j + 1) + " has non-positive Beta shape");
    ab.emplace_back(a, b);
  }
  return ab;
}

// mu = alpha/nu, Sigma = (nu A - alpha alpha^T) / (nu^2 (nu+1)), R standardized.
inline MomentSummary mean_cov(const MBetaReduced& red) {
  MomentSummary mom;
  mom.marginal_ab = marginal_params(red);
  const Eigen::VectorXd alpha = red.A.diagonal();
  mom.mu = alpha / red.nu;
  mom.Sigma = (red.nu * red.A - alpha * alpha.transpose()) / (red.nu * red.nu * (red.nu + 1.0));
  const Eigen::VectorXd sd = mom.Sigma.diagonal().cwiseSqrt();
  mom.R = mom.Sigma.array() / (sd * sd.transpose()).array();
  mom.R.diagonal().setOnes();
  return mom;
}

// Product-event Beta parameters: alpha_J = H_J gamma, beta_J = nu - alpha_J.
inline std::pair<double, double> product_beta_params(const MBetaFull& full,
                                                     const std::vector<int>& J) {
  validate_full(full);
  const double aJ = hadamard_row(*full.basis, J).dot(full.gamma);
  return {aJ, full.nu() - aJ};
}

inline MBetaFull update_full(const MBetaFull& full, const CellCounts& d) {
  validate_full(full);
  require(d.d.size() == full.basis->w, errc::length_mismatch,
          "cell counts do not match the distribution dimension");
  MBetaFull post{full.basis, full.gamma + d.as_vector()};
  return post;
}

inline MBetaReduced update_reduced(const MBetaReduced& red, const CellCounts& d,
                                   const HBasis& basis) {
  require(red.m == basis.m, errc::length_mismatch, "reduced form and basis dimension differ");
  require(d.d.size() == basis.w, errc::length_mismatch,
          "cell counts do not match the basis dimension");
  MBetaReduced post;
  post.m = red.m;
  post.nu = red.nu + static_cast<double>(d.n);
  post.A = red.A + basis.H * d.as_vector().asDiagonal() * basis.H.transpose();
  return post;
}

}  // namespace mbeta
