#pragma once

// Self-contained special functions: standard normal CDF/quantile and the
// regularized incomplete beta function with its inverse. No external
// dependencies beyond <cmath>; accuracy targets are documented per function.

#include <cmath>
#include <limits>
#include <string>

#include "mbeta/errors.hpp"

namespace mbeta {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double norm_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779399461;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// Inverse standard normal CDF. Acklam's rational approximation (|err| < 1.2e-9)
// refined by one Halley step on Phi, giving near machine precision.
inline double norm_quantile(double p) {
  require(p > 0.0 && p < 1.0, errc::domain_error, "norm_quantile requires p in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement.
  double e = norm_cdf(x) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = std::numeric_limits<double>::epsilon();
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int mIt = 1; mIt <= 500; ++mIt) {
    const double m2 = 2.0 * mIt;
    double aa = mIt * (b - mIt) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + mIt) * (qab + mIt) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 10.0 * eps) return h;
  }
  fail(errc::numerical_failure, "incomplete beta continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta function I_x(a, b).
inline double ibeta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, errc::domain_error, "ibeta requires a, b > 0");
  require(x >= 0.0 && x <= 1.0, errc::domain_error, "ibeta requires x in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double lfront = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(lfront) * detail::beta_cf(a, b, x) / a;
  return 1.0 - std::exp(lfront) * detail::beta_cf(b, a, 1.0 - x) / b;
}

// Beta(a, b) density, used as the derivative in the quantile Newton iteration.
inline double beta_pdf(double a, double b, double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b));
}

// Inverse of I_x(a, b): Newton iteration with a bisection safeguard, converging
// to |I_x(a,b) - p| <= 1e-12 (or an interval of width near machine epsilon).
inline double beta_quantile(double a, double b, double p) {
  require(a > 0.0 && b > 0.0, errc::domain_error, "beta_quantile requires a, b > 0");
  require(p > 0.0 && p < 1.0, errc::domain_error, "beta_quantile requires p in (0,1)");

  double lo = 0.0, hi = 1.0;
  double x = a / (a + b);  // start at the mean
  for (int it = 0; it < 200; ++it) {
    const double f = ibeta(a, b, x) - p;
    if (std::fabs(f) <= 1e-13) return x;
    if (f > 0.0) hi = x; else lo = x;
    const double df = beta_pdf(a, b, x);
    double xn = (df > 0.0) ? x - f / df : x;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);  // safeguard
    if (hi - lo < 4.0 * std::numeric_limits<double>::epsilon() * std::max(1e-3, x)) return x;
    x = xn;
  }
  // Residuals of a few 1e-13 are possible for extreme shapes; accept within 1e-12.
  if (std::fabs(ibeta(a, b, x) - p) <= 1e-12) return x;
  fail(errc::numerical_failure, "beta_quantile did not converge for a=" + std::to_string(a) +
                                    ", b=" + std::to_string(b));
}

}  // namespace mbeta
