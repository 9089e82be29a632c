#pragma once

// Dirichlet and multinomial sampling on top of RngStream.

#include <Eigen/Core>
#include <cmath>

#include "mbeta/binmap.hpp"
#include "mbeta/errors.hpp"
#include "mbeta/rng.hpp"

namespace mbeta {

// count x w matrix of independent Dir(gamma) draws. Components with
// gamma_k = 0 are structural zeros and come out exactly 0.
inline Eigen::MatrixXd sample_dirichlet(const Eigen::VectorXd& gamma, Eigen::Index count,
                                        RngStream& rng) {
  require((gamma.array() >= 0.0).all(), errc::domain_error, "gamma entries must be >= 0");
  require(gamma.sum() > 0.0, errc::all_zero_gamma, "gamma must have a positive entry");
  const Eigen::Index w = gamma.size();
  Eigen::MatrixXd out(count, w);
  for (Eigen::Index i = 0; i < count; ++i) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < w; ++k) {
      const double g = gamma(k) > 0.0 ? rng.gamma(gamma(k)) : 0.0;
      out(i, k) = g;
      sum += g;
    }
    if (sum <= 0.0) {
      // All draws underflowed (tiny concentrations); put the mass on the
      // largest-gamma cell, the almost-sure limit of the normalized vector.
      Eigen::Index kmax;
      gamma.maxCoeff(&kmax);
      out.row(i).setZero();
      out(i, kmax) = 1.0;
      continue;
    }
    out.row(i) /= sum;
  }
  return out;
}

// Multinomial(n, p) cell counts by CDF inversion per trial.
inline CellCounts multinomial_draw(std::int64_t n, const Eigen::VectorXd& p, RngStream& rng) {
  require(n >= 0, errc::domain_error, "multinomial n must be >= 0");
  require((p.array() >= 0.0).all() && std::fabs(p.sum() - 1.0) <= 1e-12, errc::invalid_probability,
          "p must be a probability vector summing to 1");
  const Eigen::Index w = p.size();
  Eigen::VectorXd cdf(w);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < w; ++k) {
    acc += p(k);
    cdf(k) = acc;
  }
  cdf(w - 1) = 1.0;
  CellCounts cc;
  cc.d.assign(static_cast<std::size_t>(w), 0);
  cc.n = n;
  for (std::int64_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    Eigen::Index lo = 0, hi = w - 1;
    while (lo < hi) {
      const Eigen::Index mid = (lo + hi) / 2;
      if (u <= cdf(mid)) hi = mid; else lo = mid + 1;
    }
    ++cc.d[static_cast<std::size_t>(lo)];
  }
  return cc;
}

}  // namespace mbeta
