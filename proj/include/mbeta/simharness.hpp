#pragma once

// Bayes coverage probability simulation: draw theta and data from a generative
// mBeta prior, form the analysis posterior, build credible regions per method
// on the shared dataset, and aggregate coverage indicators. Runs are keyed to
// independent RNG substreams by run index, so results are independent of the
// number of worker threads.

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mbeta/admissibility.hpp"
#include "mbeta/errors.hpp"
#include "mbeta/fit.hpp"
#include "mbeta/mbeta.hpp"
#include "mbeta/regions.hpp"
#include "mbeta/rng.hpp"
#include "mbeta/sampling.hpp"

namespace mbeta {

enum class AnalysisPrior { correct, vague };
enum class SimTarget { raw_proportions, all_vs_one_differences };

struct CorrelationSpec {
  enum class Kind { equicorrelation, block, full };
  Kind kind = Kind::equicorrelation;
  double rho = 0.0;
  int block_size = 5;      // block kind: within-block rho, between-block rho^2
  Eigen::MatrixXd values;  // full kind

  Eigen::MatrixXd build(int m) const {
    Eigen::MatrixXd R(m, m);
    switch (kind) {
      case Kind::equicorrelation:
        R.setConstant(rho);
        break;
      case Kind::block:
        R.setConstant(rho * rho);
        for (int b = 0; b < m; b += block_size) {
          const int s = std::min(block_size, m - b);
          R.block(b, b, s, s).setConstant(rho);
        }
        break;
      case Kind::full:
        require(values.rows() == m && values.cols() == m, errc::length_mismatch,
                "full correlation matrix has wrong dimensions");
        R = values;
        break;
    }
    R.diagonal().setOnes();
    return R;
  }
};

struct Scenario {
  std::string id = "scenario";
  int m = 2;
  double nu_g = 20.0;
  Eigen::VectorXd mu_g;
  CorrelationSpec R_g;
  std::int64_t n = 100;
  AnalysisPrior analysis_prior = AnalysisPrior::correct;
  std::vector<RegionMethod> methods{RegionMethod::copula};
  SimTarget target = SimTarget::raw_proportions;
  double alpha = 0.05;
  long long N_sim = 2000;
  std::uint64_t seed = 0;
  long long n_r = 2000;  // posterior sample size for the extensive method
  QmcSettings qmc{5e-3, 1024, 8, 1LL << 26};  // reduced budget inside simulation
  int m_max = default_m_max;
};

struct MethodStats {
  long long runs = 0;
  long long covered = 0;
  long long failures = 0;
  long long outside_support = 0;  // approximate regions leaving (0,1)^m
  double sum_log_volume = 0.0;

  double bcp() const { return runs > 0 ? static_cast<double>(covered) / runs : 0.0; }
  double se() const {
    if (runs <= 0) return 0.0;
    const double p = bcp();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(runs));
  }
  double frac_outside() const {
    return runs > 0 ? static_cast<double>(outside_support) / runs : 0.0;
  }
  double mean_log_volume() const { return runs > 0 ? sum_log_volume / runs : 0.0; }
};

struct SimResult {
  Scenario scenario;
  std::vector<MethodStats> per_method;  // aligned with scenario.methods
};

struct GenerativePrior {
  MBetaFull prior;
  FitResult fit;
};

inline GenerativePrior build_generative_prior(const Scenario& scn,
                                              std::shared_ptr<const HBasis> basis) {
  require(scn.m == basis->m, errc::length_mismatch, "scenario/basis dimension mismatch");
  MomentTarget target;
  target.nu = scn.nu_g;
  target.mu = scn.mu_g;
  target.R = scn.R_g.build(scn.m);
  MBetaReduced red;
  try {
    red = derive_moment_matrix(target);
  } catch (const Error& e) {
    fail(errc::infeasible_scenario, std::string("generative target invalid: ") + e.what());
  }
  FitResult fit;
  try {
    fit = fit_gamma(red, *basis, scn.m_max);
  } catch (const Error& e) {
    fail(errc::infeasible_scenario, std::string("generative prior fit failed: ") + e.what());
  }
  if (!fit.exact)
    fail(errc::infeasible_scenario,
         "generative prior is not exactly representable (LS residual " +
             std::to_string(fit.residual) + ")");
  return {make_full(std::move(basis), fit.gamma), fit};
}

namespace detail {

struct RunOutcome {
  // per method: -1 failure, 0 not covered, 1 covered
  std::array<int, 8> covered{};
  std::array<int, 8> outside{};
  std::array<double, 8> log_volume{};
};

}  // namespace detail

inline SimResult run_simulation(const Scenario& scn, int threads = 0) {
  require(scn.N_sim >= 1, errc::domain_error, "N_sim must be >= 1");
  require(!scn.methods.empty(), errc::domain_error, "scenario lists no methods");
  require(scn.methods.size() <= 8, errc::domain_error, "too many methods");
  require(scn.mu_g.size() == scn.m, errc::length_mismatch, "mu_g length != m");

  auto basis = std::make_shared<const HBasis>(build_basis(scn.m, scn.m_max));
  const GenerativePrior gen = build_generative_prior(scn, basis);
  const Eigen::VectorXd gamma_g = gen.prior.gamma;
  const auto w = static_cast<Eigen::Index>(basis->w);
  const Eigen::VectorXd gamma_vague = Eigen::VectorXd::Constant(w, 2.0 / static_cast<double>(w));

  std::optional<ContrastMatrix> contrast;
  if (scn.target == SimTarget::all_vs_one_differences) contrast = all_vs_one(scn.m);

  const bool wants_approx =
      std::count(scn.methods.begin(), scn.methods.end(), RegionMethod::approximate) > 0;
  const bool wants_copula =
      std::count(scn.methods.begin(), scn.methods.end(), RegionMethod::copula) > 0;

  std::vector<detail::RunOutcome> outcomes(static_cast<std::size_t>(scn.N_sim));
  const RngStream root(scn.seed);

  auto run_one = [&](long long run) {
    detail::RunOutcome& out = outcomes[static_cast<std::size_t>(run)];
    RngStream run_stream = root.substream(static_cast<std::uint64_t>(run));
    RngStream p_stream = run_stream.substream(1);
    RngStream d_stream = run_stream.substream(2);
    RngStream q_stream = run_stream.substream(3);

    const Eigen::VectorXd p = sample_dirichlet(gamma_g, 1, p_stream).row(0);
    const Eigen::VectorXd theta = basis->H * p;
    const CellCounts d = multinomial_draw(scn.n, p, d_stream);

    const Eigen::VectorXd& gamma_a =
        (scn.analysis_prior == AnalysisPrior::correct) ? gamma_g : gamma_vague;
    const MBetaFull post{basis, gamma_a + d.as_vector()};
    const MBetaReduced red = moment_matrix(post);
    const Eigen::VectorXd truth =
        contrast ? Eigen::VectorXd(contrast->K * theta) : theta;

    // Approximate and copula share one equicoordinate constant per run.
    std::optional<MomentSummary> mom;
    double c_alpha = 0.0;
    if ((wants_approx || wants_copula) && !contrast) {
      mom = mean_cov(red);
      c_alpha =
          equicoordinate_quantile(detail::quantile_request(mom->R, 1.0 - scn.alpha, scn.qmc),
                                  q_stream)
              .c_alpha;
    }

    for (std::size_t mi = 0; mi < scn.methods.size(); ++mi) {
      const RegionMethod method = scn.methods[mi];
      try {
        CredibleRegion cr;
        if (contrast) {
          RngStream c_stream = run_stream.substream(16 + static_cast<std::uint64_t>(mi));
          cr = cr_contrast(red, post, *contrast, scn.alpha, method, c_stream, scn.n_r, scn.qmc);
        } else if (method == RegionMethod::approximate) {
          cr = normal_region(*mom, scn.alpha, c_alpha);
        } else if (method == RegionMethod::copula) {
          cr = copula_region(mom->marginal_ab, scn.alpha, c_alpha);
        } else {
          RngStream e_stream = run_stream.substream(32);
          cr = cr_extensive(post, scn.alpha, scn.n_r, e_stream);
        }
        out.covered[mi] = cr.contains(truth) ? 1 : 0;
        out.outside[mi] = cr.in_support ? 0 : 1;
        out.log_volume[mi] = (cr.upper - cr.lower).array().log().sum();
      } catch (const Error&) {
        out.covered[mi] = -1;
      }
    }
  };

  int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = static_cast<int>(std::min<long long>(n_threads, scn.N_sim));
  if (n_threads == 1) {
    for (long long run = 0; run < scn.N_sim; ++run) run_one(run);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t]() {
        for (long long run = t; run < scn.N_sim; run += n_threads) run_one(run);
      });
    for (auto& th : pool) th.join();
  }

  SimResult res;
  res.scenario = scn;
  res.per_method.assign(scn.methods.size(), MethodStats{});
  for (const auto& out : outcomes)
    for (std::size_t mi = 0; mi < scn.methods.size(); ++mi) {
      MethodStats& st = res.per_method[mi];
      if (out.covered[mi] < 0) {
        ++st.failures;
        continue;
      }
      ++st.runs;
      st.covered += out.covered[mi];
      st.outside_support += out.outside[mi];
      st.sum_log_volume += out.log_volume[mi];
    }
  return res;
}

}  // namespace mbeta
