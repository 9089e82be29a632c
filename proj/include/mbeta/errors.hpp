#pragma once

#include <stdexcept>
#include <string>

namespace mbeta {

enum class errc {
  dimension_too_large,
  non_binary_entry,
  empty_index_set,
  length_mismatch,
  degenerate_marginal,
  invalid_correlation,
  numerical_failure,
  equality_infeasible,
  domain_error,
  all_zero_gamma,
  cholesky_failure,
  budget_exceeded,
  insufficient_samples,
  singular_contrast_covariance,
  invalid_probability,
  infeasible_scenario,
  gamma_unavailable,
  io_error,
  parse_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::dimension_too_large: return "DimensionTooLarge";
    case errc::non_binary_entry: return "NonBinaryEntry";
    case errc::empty_index_set: return "EmptyIndexSet";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::degenerate_marginal: return "DegenerateMarginal";
    case errc::invalid_correlation: return "InvalidCorrelation";
    case errc::numerical_failure: return "NumericalFailure";
    case errc::equality_infeasible: return "EqualityInfeasible";
    case errc::domain_error: return "DomainError";
    case errc::all_zero_gamma: return "AllZeroGamma";
    case errc::cholesky_failure: return "CholeskyFailure";
    case errc::budget_exceeded: return "BudgetExceeded";
    case errc::insufficient_samples: return "InsufficientSamples";
    case errc::singular_contrast_covariance: return "SingularContrastCovariance";
    case errc::invalid_probability: return "InvalidProbability";
    case errc::infeasible_scenario: return "InfeasibleScenario";
    case errc::gamma_unavailable: return "GammaUnavailable";
    case errc::io_error: return "IoError";
    case errc::parse_error: return "ParseError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace mbeta
