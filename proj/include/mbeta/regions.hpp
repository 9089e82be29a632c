#pragma once

// Simultaneous credible regions for the mBeta posterior by three methods:
//
//   approximate - normal approximation with the equicoordinate constant c_alpha
//   copula      - exact Beta marginals at adjusted tails alpha~ = 2(1-Phi(c_alpha))
//   extensive   - marginal quantile intervals tuned on a Dirichlet posterior
//                 sample until (1-alpha) n_r sample points are covered
//
// plus linear-contrast targets K theta and credible-bound test decisions.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mbeta/errors.hpp"
#include "mbeta/mbeta.hpp"
#include "mbeta/mvn.hpp"
#include "mbeta/rng.hpp"
#include "mbeta/sampling.hpp"
#include "mbeta/special.hpp"

namespace mbeta {

enum class RegionMethod { approximate, copula, extensive };

inline const char* method_name(RegionMethod m) {
  switch (m) {
    case RegionMethod::approximate: return "approximate";
    case RegionMethod::copula: return "copula";
    case RegionMethod::extensive: return "extensive";
  }
  return "?";
}

struct QmcSettings {
  double mc_tolerance = 2e-3;
  int n_qmc = 8192;
  int n_randomizations = 16;
  long long max_samples = 1LL << 26;
};

struct CredibleRegion {
  RegionMethod method = RegionMethod::approximate;
  double level = 0.0;  // 1 - alpha
  Eigen::VectorXd lower, upper;
  std::vector<std::string> labels;
  double c_alpha = std::numeric_limits<double>::quiet_NaN();
  double alpha_tilde = std::numeric_limits<double>::quiet_NaN();
  long long n_r = 0;
  bool in_support = true;  // region contained in the support of the target

  bool contains(const Eigen::VectorXd& theta) const {
    return (theta.array() > lower.array()).all() && (theta.array() < upper.array()).all();
  }
};

struct ContrastMatrix {
  Eigen::MatrixXd K;  // t x m
  std::vector<std::string> labels;
};

inline ContrastMatrix all_vs_one(int m) {
  require(m >= 2, errc::domain_error, "all-vs-one needs m >= 2");
  ContrastMatrix cm;
  cm.K.setZero(m - 1, m);
  for (int j = 0; j < m - 1; ++j) {
    cm.K(j, j) = 1.0;
    cm.K(j, m - 1) = -1.0;
    cm.labels.push_back("theta_" + std::to_string(j + 1) + "-theta_" + std::to_string(m));
  }
  return cm;
}

inline void validate_contrast(const ContrastMatrix& cm, int m) {
  require(cm.K.rows() >= 1, errc::domain_error, "contrast matrix needs at least one row");
  require(cm.K.cols() == m, errc::length_mismatch, "contrast matrix has wrong column count");
  for (Eigen::Index t = 0; t < cm.K.rows(); ++t)
    require(cm.K.row(t).cwiseAbs().maxCoeff() > 0.0, errc::domain_error,
            "contrast matrix has an all-zero row");
}

namespace detail {

inline std::vector<std::string> coordinate_labels(int m) {
  std::vector<std::string> lab;
  for (int j = 1; j <= m; ++j) lab.push_back("theta_" + std::to_string(j));
  return lab;
}

inline QuantileRequest quantile_request(const Eigen::MatrixXd& R, double level,
                                        const QmcSettings& s) {
  QuantileRequest req;
  req.R = R;
  req.level = level;
  req.mc_tolerance = s.mc_tolerance;
  req.n_qmc = s.n_qmc;
  req.n_randomizations = s.n_randomizations;
  req.max_samples = s.max_samples;
  return req;
}

// Type-7 empirical quantile (sorted linear interpolation).
inline double empirical_quantile(std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  const double h = (static_cast<double>(n) - 1.0) * p;
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= n) return sorted[n - 1];
  return sorted[i] + (h - static_cast<double>(i)) * (sorted[i + 1] - sorted[i]);
}

}  // namespace detail

// Normal-approximation region given a precomputed c_alpha.
inline CredibleRegion normal_region(const MomentSummary& mom, double alpha, double c_alpha) {
  CredibleRegion cr;
  cr.method = RegionMethod::approximate;
  cr.level = 1.0 - alpha;
  cr.c_alpha = c_alpha;
  const Eigen::VectorXd half = c_alpha * mom.Sigma.diagonal().cwiseSqrt();
  cr.lower = mom.mu - half;
  cr.upper = mom.mu + half;
  cr.labels = detail::coordinate_labels(static_cast<int>(mom.mu.size()));
  cr.in_support = (cr.lower.array() > 0.0).all() && (cr.upper.array() < 1.0).all();
  return cr;
}

// Copula region given a precomputed c_alpha: exact Beta marginal quantiles at
// the adjusted two-sided tail mass alpha~ = 2 (1 - Phi(c_alpha)), which makes
// each margin's coverage match the normal-approximation region's per-margin
// coverage 2 Phi(c_alpha) - 1.
inline CredibleRegion copula_region(const std::vector<std::pair<double, double>>& marginal_ab,
                                    double alpha, double c_alpha) {
  CredibleRegion cr;
  cr.method = RegionMethod::copula;
  cr.level = 1.0 - alpha;
  cr.c_alpha = c_alpha;
  cr.alpha_tilde = 2.0 * (1.0 - norm_cdf(c_alpha));
  const auto m = static_cast<Eigen::Index>(marginal_ab.size());
  cr.lower.resize(m);
  cr.upper.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto [a, b] = marginal_ab[static_cast<std::size_t>(j)];
    cr.lower(j) = beta_quantile(a, b, cr.alpha_tilde / 2.0);
    cr.upper(j) = beta_quantile(a, b, 1.0 - cr.alpha_tilde / 2.0);
  }
  cr.labels = detail::coordinate_labels(static_cast<int>(m));
  cr.in_support = true;  // Beta quantiles lie strictly inside (0,1)
  return cr;
}

inline CredibleRegion cr_normal(const MBetaReduced& red, double alpha, RngStream& rng,
                                const QmcSettings& qmc = {}) {
  const MomentSummary mom = mean_cov(red);
  const auto eq = equicoordinate_quantile(detail::quantile_request(mom.R, 1.0 - alpha, qmc), rng);
  return normal_region(mom, alpha, eq.c_alpha);
}

inline CredibleRegion cr_copula(const MBetaReduced& red, double alpha, RngStream& rng,
                                const QmcSettings& qmc = {}) {
  const MomentSummary mom = mean_cov(red);
  const auto eq = equicoordinate_quantile(detail::quantile_request(mom.R, 1.0 - alpha, qmc), rng);
  return copula_region(mom.marginal_ab, alpha, eq.c_alpha);
}

namespace detail {

// Largest alpha~ (within `tol`) whose marginal-quantile box covers at least
// `needed` of the sample rows; intervals(alpha~) must be nonincreasing in
// alpha~ per coordinate. `bounds_at` fills lower/upper for a given alpha~.
template <typename BoundsAt>
inline double tune_alpha_tilde(const Eigen::MatrixXd& sample, Eigen::Index needed,
                               BoundsAt&& bounds_at, double tol = 1e-6) {
  const Eigen::Index n = sample.rows(), m = sample.cols();
  Eigen::VectorXd lo(m), hi(m);
  auto count_inside = [&](double at) {
    bounds_at(at, lo, hi);
    Eigen::Index cnt = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      bool in = true;
      for (Eigen::Index j = 0; j < m; ++j)
        if (!(sample(i, j) > lo(j) && sample(i, j) < hi(j))) { in = false; break; }
      cnt += in;
    }
    return cnt;
  };
  double a_lo = 1e-9, a_hi = 1.0 - 1e-9;
  while (count_inside(a_lo) < needed && a_lo > 1e-15) a_lo /= 8.0;
  if (count_inside(a_hi) >= needed) return a_hi;
  while (a_hi - a_lo > tol) {
    const double mid = 0.5 * (a_lo + a_hi);
    if (count_inside(mid) >= needed) a_lo = mid; else a_hi = mid;
  }
  return a_lo;
}

}  // namespace detail

inline CredibleRegion cr_extensive(const MBetaFull& full, double alpha, long long n_r,
                                   RngStream& rng) {
  validate_full(full);
  require(n_r >= 1000, errc::insufficient_samples, "extensive method requires n_r >= 1000");
  const MBetaReduced red = moment_matrix(full);
  const auto ab = marginal_params(red);

  const Eigen::MatrixXd sp = sample_dirichlet(full.gamma, static_cast<Eigen::Index>(n_r), rng);
  const Eigen::MatrixXd theta = sp * full.basis->H.transpose();

  const auto needed = static_cast<Eigen::Index>(
      std::ceil((1.0 - alpha) * static_cast<double>(n_r) - 1e-9));
  const double at = detail::tune_alpha_tilde(
      theta, needed, [&](double a, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
        for (Eigen::Index j = 0; j < theta.cols(); ++j) {
          const auto [aj, bj] = ab[static_cast<std::size_t>(j)];
          lo(j) = beta_quantile(aj, bj, a / 2.0);
          hi(j) = beta_quantile(aj, bj, 1.0 - a / 2.0);
        }
      });

  CredibleRegion cr;
  cr.method = RegionMethod::extensive;
  cr.level = 1.0 - alpha;
  cr.alpha_tilde = at;
  cr.n_r = n_r;
  cr.lower.resize(red.m);
  cr.upper.resize(red.m);
  for (int j = 0; j < red.m; ++j) {
    const auto [aj, bj] = ab[static_cast<std::size_t>(j)];
    cr.lower(j) = beta_quantile(aj, bj, at / 2.0);
    cr.upper(j) = beta_quantile(aj, bj, 1.0 - at / 2.0);
  }
  cr.labels = detail::coordinate_labels(red.m);
  cr.in_support = true;
  return cr;
}

// Support of the contrast K theta over theta in (0,1)^m: row-wise
// (sum of negative coefficients, sum of positive coefficients).
inline void contrast_support(const Eigen::MatrixXd& K, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  lo = K.cwiseMin(0.0).rowwise().sum();
  hi = K.cwiseMax(0.0).rowwise().sum();
}

inline CredibleRegion cr_contrast(const MBetaReduced& red, const std::optional<MBetaFull>& full,
                                  const ContrastMatrix& cm, double alpha, RegionMethod method,
                                  RngStream& rng, long long n_r = 10000,
                                  const QmcSettings& qmc = {}) {
  validate_contrast(cm, red.m);
  const MomentSummary mom = mean_cov(red);
  const Eigen::Index t = cm.K.rows();
  const Eigen::VectorXd mean = cm.K * mom.mu;
  const Eigen::MatrixXd cov = cm.K * mom.Sigma * cm.K.transpose();
  for (Eigen::Index i = 0; i < t; ++i)
    require(cov(i, i) > 0.0, errc::singular_contrast_covariance,
            "contrast " + std::to_string(i + 1) + " has zero variance");
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  Eigen::MatrixXd Rk = cov.array() / (sd * sd.transpose()).array();
  Rk.diagonal().setOnes();

  Eigen::VectorXd sup_lo, sup_hi;
  contrast_support(cm.K, sup_lo, sup_hi);

  CredibleRegion cr;
  cr.method = method;
  cr.level = 1.0 - alpha;
  cr.labels = cm.labels.empty()
                  ? std::vector<std::string>(static_cast<std::size_t>(t), "contrast")
                  : cm.labels;
  cr.n_r = (method == RegionMethod::approximate) ? 0 : n_r;

  if (method == RegionMethod::approximate) {
    const auto eq = equicoordinate_quantile(detail::quantile_request(Rk, 1.0 - alpha, qmc), rng);
    cr.c_alpha = eq.c_alpha;
    cr.lower = mean - eq.c_alpha * sd;
    cr.upper = mean + eq.c_alpha * sd;
    cr.in_support =
        (cr.lower.array() > sup_lo.array()).all() && (cr.upper.array() < sup_hi.array()).all();
    return cr;
  }

  require(full.has_value(), errc::gamma_unavailable,
          "copula/extensive contrast regions need the full parameter vector");
  require(n_r >= 1000, errc::insufficient_samples, "contrast sampling requires n_r >= 1000");
  const Eigen::MatrixXd sp = sample_dirichlet(full->gamma, static_cast<Eigen::Index>(n_r), rng);
  const Eigen::MatrixXd tsample = sp * full->basis->H.transpose() * cm.K.transpose();

  std::vector<std::vector<double>> cols(static_cast<std::size_t>(t));
  for (Eigen::Index j = 0; j < t; ++j) {
    auto& v = cols[static_cast<std::size_t>(j)];
    v.resize(static_cast<std::size_t>(n_r));
    for (Eigen::Index i = 0; i < tsample.rows(); ++i) v[static_cast<std::size_t>(i)] = tsample(i, j);
    std::sort(v.begin(), v.end());
  }
  auto empirical_bounds = [&](double at, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
    for (Eigen::Index j = 0; j < t; ++j) {
      lo(j) = detail::empirical_quantile(cols[static_cast<std::size_t>(j)], at / 2.0);
      hi(j) = detail::empirical_quantile(cols[static_cast<std::size_t>(j)], 1.0 - at / 2.0);
    }
  };

  if (method == RegionMethod::copula) {
    const auto eq = equicoordinate_quantile(detail::quantile_request(Rk, 1.0 - alpha, qmc), rng);
    cr.c_alpha = eq.c_alpha;
    cr.alpha_tilde = 2.0 * (1.0 - norm_cdf(eq.c_alpha));
    cr.lower.resize(t);
    cr.upper.resize(t);
    empirical_bounds(cr.alpha_tilde, cr.lower, cr.upper);
  } else {
    const auto needed = static_cast<Eigen::Index>(
        std::ceil((1.0 - alpha) * static_cast<double>(n_r) - 1e-9));
    cr.alpha_tilde = detail::tune_alpha_tilde(tsample, needed, empirical_bounds);
    cr.lower.resize(t);
    cr.upper.resize(t);
    empirical_bounds(cr.alpha_tilde, cr.lower, cr.upper);
  }
  cr.in_support =
      (cr.lower.array() > sup_lo.array()).all() && (cr.upper.array() < sup_hi.array()).all();
  return cr;
}

// Credible-bound test decisions: decision_j = 1 iff theta0_j lies outside
// [lower_j, upper_j]. A pure bound comparison.
inline std::vector<int> decide_hypotheses(const CredibleRegion& cr, const Eigen::VectorXd& theta0) {
  require(theta0.size() == cr.lower.size(), errc::length_mismatch,
          "theta0 length does not match the region dimension");
  std::vector<int> phi(static_cast<std::size_t>(theta0.size()));
  for (Eigen::Index j = 0; j < theta0.size(); ++j)
    phi[static_cast<std::size_t>(j)] = (theta0(j) < cr.lower(j) || theta0(j) > cr.upper(j)) ? 1 : 0;
  return phi;
}

inline std::vector<int> decide_hypotheses(const CredibleRegion& cr, double theta0) {
  return decide_hypotheses(cr, Eigen::VectorXd::Constant(cr.lower.size(), theta0));
}

}  // namespace mbeta
