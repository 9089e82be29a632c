// Command-line front end for the multivariate Beta-binomial model: prior
// fitting with admissibility reports, posterior updating from binary data,
// credible-region construction, density-grid export, and coverage simulation.
//
// Exit codes: 0 success, 1 I/O or parse error, 2 statistical
// infeasibility/unavailability.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mbeta/admissibility.hpp"
#include "mbeta/binmap.hpp"
#include "mbeta/errors.hpp"
#include "mbeta/fit.hpp"
#include "mbeta/io.hpp"
#include "mbeta/mbeta.hpp"
#include "mbeta/regions.hpp"
#include "mbeta/rng.hpp"
#include "mbeta/sampling.hpp"
#include "mbeta/simharness.hpp"

namespace {

using mbeta::json;

int exit_code_for(const mbeta::Error& e) {
  switch (e.code()) {
    case mbeta::errc::equality_infeasible:
    case mbeta::errc::infeasible_scenario:
    case mbeta::errc::gamma_unavailable:
    case mbeta::errc::invalid_correlation:
    case mbeta::errc::insufficient_samples:
    case mbeta::errc::dimension_too_large:
      return 2;
    default:
      return 1;
  }
}

json bounds_report(const mbeta::MBetaReduced& red) {
  json rep = json::object();
  const auto fb = mbeta::frechet_bounds(red);
  if (!fb.ok) {
    json v = json::array();
    for (auto [j, k] : fb.violations) v.push_back(json::array({j, k}));
    rep["frechet"] = std::move(v);
  }
  json pw = json::array();
  const Eigen::VectorXd mu = red.A.diagonal() / red.nu;
  for (int j = 0; j < red.m; ++j)
    for (int k = j + 1; k < red.m; ++k) {
      const auto [lo, hi] = mbeta::pairwise_correlation_bounds(mu(j), mu(k));
      const double cov = (red.nu * red.A(j, k) - red.A(j, j) * red.A(k, k));
      const double denom = std::sqrt((red.nu * red.A(j, j) - red.A(j, j) * red.A(j, j)) *
                                     (red.nu * red.A(k, k) - red.A(k, k) * red.A(k, k)));
      const double rho = denom > 0 ? cov / denom : 0.0;
      if (rho < lo || rho > hi)
        pw.push_back(json::array({j + 1, k + 1}));
    }
  if (!pw.empty()) rep["pairwise"] = std::move(pw);
  return rep;
}

int cmd_fit(const std::string& spec_path, const std::string& out_path, int max_full_dim,
            int m_max) {
  const mbeta::PriorSpec spec = mbeta::prior_spec_from_json(mbeta::read_json_file(spec_path));

  mbeta::Distribution dist;
  json adm = json::object();

  if (spec.gamma) {
    auto basis = std::make_shared<const mbeta::HBasis>(mbeta::build_basis(spec.m, m_max));
    const mbeta::MBetaFull full = mbeta::make_full(basis, *spec.gamma);
    dist.red = mbeta::moment_matrix(full);
    dist.gamma = full.gamma;
    adm["status"] = "feasible";  // any gamma >= 0 satisfies the moment conditions
  } else if (spec.vague) {
    auto basis = std::make_shared<const mbeta::HBasis>(mbeta::build_basis(spec.m, m_max));
    const mbeta::MBetaFull full = mbeta::vague_full(basis);
    dist.red = mbeta::moment_matrix(full);
    dist.gamma = full.gamma;
    adm["status"] = "feasible";
  } else {
    const mbeta::MBetaReduced target = mbeta::derive_moment_matrix(*spec.moments);
    if (spec.m <= max_full_dim) {
      const mbeta::HBasis basis = mbeta::build_basis(spec.m, m_max);
      const mbeta::FeasibilityResult mc = mbeta::check_mc(target, basis, max_full_dim);
      if (mc.status == mbeta::Feasibility::infeasible) {
        adm["status"] = "infeasible";
        if (mc.certificate) adm["certificate"] = mbeta::vector_to_json(*mc.certificate);
        adm["certificate_exact"] = mc.certificate_exact;
        const json vb = bounds_report(target);
        if (!vb.empty()) adm["violated_bounds"] = vb;
        json out;
        out["admissibility"] = adm;
        mbeta::write_text_file(out_path, out.dump(2) + "\n");
        std::cerr << "target (nu, A) does not satisfy the moment conditions\n";
        return 2;
      }
      const mbeta::FitResult fit = mbeta::fit_gamma(target, basis, m_max);
      auto basis_ptr = std::make_shared<const mbeta::HBasis>(basis);
      dist.red = mbeta::moment_matrix(mbeta::make_full(basis_ptr, fit.gamma));
      dist.gamma = fit.gamma;
      dist.fit_residual = fit.residual;
      dist.fit_exact = fit.exact;
      adm["status"] = "feasible";
    } else {
      // Reduced pipeline: only the necessary Frechet bounds are checked.
      const auto fb = mbeta::frechet_bounds(target);
      const json vb = bounds_report(target);
      if (!fb.ok) {
        adm["status"] = "infeasible";
        adm["violated_bounds"] = vb;
        json out;
        out["admissibility"] = adm;
        mbeta::write_text_file(out_path, out.dump(2) + "\n");
        std::cerr << "target (nu, A) violates the Frechet bounds\n";
        return 2;
      }
      dist.red = target;
      adm["status"] = "unverified";  // FB passed; (MC) not checked at this dimension
    }
  }

  json out = mbeta::to_json(dist);
  out["admissibility"] = adm;
  mbeta::write_text_file(out_path, out.dump(2) + "\n");
  return 0;
}

int cmd_update(const std::string& dist_path, const std::string& data_path,
               const std::string& out_path, const std::string& cells_out, int m_max) {
  const mbeta::Distribution prior =
      mbeta::distribution_from_json(mbeta::read_json_file(dist_path));
  const mbeta::BinaryData data = mbeta::read_binary_csv(data_path);
  mbeta::require(data.m == prior.red.m, mbeta::errc::length_mismatch,
                 "data has " + std::to_string(data.m) + " columns, distribution has m = " +
                     std::to_string(prior.red.m));
  if (!cells_out.empty()) {
    mbeta::require(data.m <= m_max, mbeta::errc::dimension_too_large,
                   "cell-count export enumerates 2^m cells and needs m <= " +
                       std::to_string(m_max));
    mbeta::write_text_file(cells_out, mbeta::cell_counts_csv(mbeta::cell_counts(data), data.m));
  }

  mbeta::Distribution post;
  json update_info{{"n", data.n}};
  if (prior.gamma) {
    auto basis = std::make_shared<const mbeta::HBasis>(mbeta::build_basis(prior.red.m, m_max));
    const mbeta::CellCounts cc = mbeta::cell_counts(data);
    const mbeta::MBetaFull full =
        mbeta::update_full(mbeta::make_full(basis, *prior.gamma), cc);
    post.red = mbeta::moment_matrix(full);
    post.gamma = full.gamma;
    long long nonzero = 0;
    for (auto v : cc.d) nonzero += (v > 0);
    update_info["cells_nonzero"] = nonzero;
  } else {
    // Reduced-only update: U = X^T X equals H diag(d) H^T without forming the
    // 2^m cell space.
    Eigen::MatrixXd X(static_cast<Eigen::Index>(data.n), data.m);
    for (std::size_t i = 0; i < data.n; ++i)
      for (int j = 0; j < data.m; ++j) X(static_cast<Eigen::Index>(i), j) = data(i, j);
    post.red.m = prior.red.m;
    post.red.nu = prior.red.nu + static_cast<double>(data.n);
    post.red.A = prior.red.A + X.transpose() * X;
  }
  json out = mbeta::to_json(post);
  out["last_update"] = std::move(update_info);
  mbeta::write_text_file(out_path, out.dump(2) + "\n");
  return 0;
}

int cmd_region(const std::string& dist_path, const std::string& method_name, double level,
               const std::string& contrast, std::uint64_t seed, long long n_r,
               const std::string& out_path, int m_max) {
  const mbeta::Distribution dist =
      mbeta::distribution_from_json(mbeta::read_json_file(dist_path));
  const double alpha = 1.0 - level;
  mbeta::require(level > 0.0 && level < 1.0, mbeta::errc::domain_error,
                 "level must be in (0,1)");

  mbeta::RegionMethod method;
  if (method_name == "approximate") method = mbeta::RegionMethod::approximate;
  else if (method_name == "copula") method = mbeta::RegionMethod::copula;
  else if (method_name == "extensive") method = mbeta::RegionMethod::extensive;
  else mbeta::fail(mbeta::errc::parse_error, "unknown method: " + method_name);

  std::optional<mbeta::MBetaFull> full;
  if (dist.gamma) {
    auto basis = std::make_shared<const mbeta::HBasis>(mbeta::build_basis(dist.red.m, m_max));
    full = mbeta::make_full(basis, *dist.gamma);
  }

  mbeta::RngStream rng(seed);
  mbeta::CredibleRegion cr;
  if (contrast == "all-vs-one") {
    const mbeta::ContrastMatrix K = mbeta::all_vs_one(dist.red.m);
    cr = mbeta::cr_contrast(dist.red, full, K, alpha, method, rng, n_r);
  } else if (method == mbeta::RegionMethod::approximate) {
    cr = mbeta::cr_normal(dist.red, alpha, rng);
  } else if (method == mbeta::RegionMethod::copula) {
    cr = mbeta::cr_copula(dist.red, alpha, rng);
  } else {
    mbeta::require(full.has_value(), mbeta::errc::gamma_unavailable,
                   "the extensive method needs the full parameter vector gamma; "
                   "this distribution only carries the reduced parametrisation");
    cr = mbeta::cr_extensive(*full, alpha, n_r, rng);
  }
  mbeta::write_text_file(out_path, mbeta::region_csv(cr));
  return 0;
}

int cmd_grid(const std::string& dist_path, const std::string& pairs_arg, int resolution,
             long long n_r, std::uint64_t seed, const std::string& out_path, int m_max) {
  const mbeta::Distribution dist =
      mbeta::distribution_from_json(mbeta::read_json_file(dist_path));
  mbeta::require(dist.gamma.has_value(), mbeta::errc::gamma_unavailable,
                 "density grids need the full parameter vector gamma");
  mbeta::require(resolution >= 1, mbeta::errc::domain_error, "resolution must be >= 1");
  mbeta::require(n_r >= 1, mbeta::errc::domain_error, "n_r must be >= 1");

  std::vector<std::pair<int, int>> pairs;
  {
    std::stringstream ss(pairs_arg);
    std::string tok;
    while (std::getline(ss, tok, ';')) {
      if (tok.empty()) continue;
      int a = 0, b = 0;
      if (std::sscanf(tok.c_str(), "%d,%d", &a, &b) != 2)
        mbeta::fail(mbeta::errc::parse_error, "pair '" + tok + "' is not of the form j,k");
      mbeta::require(a >= 1 && b >= 1 && a <= dist.red.m && b <= dist.red.m && a != b,
                     mbeta::errc::domain_error, "pair indices out of range");
      pairs.emplace_back(a, b);
    }
  }

  auto basis = std::make_shared<const mbeta::HBasis>(mbeta::build_basis(dist.red.m, m_max));
  const mbeta::MBetaFull full = mbeta::make_full(basis, *dist.gamma);
  mbeta::RngStream rng(seed);
  const Eigen::MatrixXd sp = mbeta::sample_dirichlet(full.gamma, n_r, rng);
  const Eigen::MatrixXd theta = sp * basis->H.transpose();

  auto bin_of = [&](double v) {
    int b = static_cast<int>(v * resolution);
    if (b < 0) b = 0;
    if (b >= resolution) b = resolution - 1;
    return b;
  };

  std::ostringstream os;
  os << "kind,coord_a,coord_b,bin_a,bin_b,mass\n";
  const double mass1 = 1.0 / static_cast<double>(n_r);
  for (int j = 0; j < dist.red.m; ++j) {
    std::vector<double> hist(static_cast<std::size_t>(resolution), 0.0);
    for (Eigen::Index i = 0; i < theta.rows(); ++i)
      hist[static_cast<std::size_t>(bin_of(theta(i, j)))] += mass1;
    for (int b = 0; b < resolution; ++b)
      os << "marginal," << (j + 1) << ",," << b << ",," << mbeta::fmt_double(hist[b]) << "\n";
  }
  for (auto [a, b] : pairs) {
    std::vector<double> hist(static_cast<std::size_t>(resolution) * resolution, 0.0);
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
      const int ba = bin_of(theta(i, a - 1));
      const int bb = bin_of(theta(i, b - 1));
      hist[static_cast<std::size_t>(ba) * resolution + bb] += mass1;
    }
    for (int ba = 0; ba < resolution; ++ba)
      for (int bb = 0; bb < resolution; ++bb)
        os << "pair," << a << "," << b << "," << ba << "," << bb << ","
           << mbeta::fmt_double(hist[static_cast<std::size_t>(ba) * resolution + bb]) << "\n";
  }
  mbeta::write_text_file(out_path, os.str());
  return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_path, int threads) {
  const mbeta::Scenario scn = mbeta::scenario_from_json(mbeta::read_json_file(scenario_path));
  const mbeta::SimResult res = mbeta::run_simulation(scn, threads);
  mbeta::write_text_file(out_path, mbeta::sim_result_csv(res));
  long long failures = 0;
  for (const auto& st : res.per_method) failures += st.failures;
  if (failures > 0)
    std::cerr << failures << " simulation runs failed and were excluded (see failures column)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian simultaneous inference for multiple correlated proportions "
               "via the multivariate Beta-binomial model"};
  app.require_subcommand(1);

  int max_full_dim = mbeta::default_max_full_dim;
  int m_max = mbeta::default_m_max;
  app.add_option("--max-full-dim", max_full_dim,
                 "largest dimension handled with the full 2^m parametrisation")
      ->check(CLI::Range(1, mbeta::default_m_max));

  std::string spec_path, dist_path, data_path, out_path, scenario_path, cells_out;
  std::string method = "copula", contrast = "none", pairs = "";
  double level = 0.95;
  std::uint64_t seed = 0;
  long long n_r = 10000;
  int resolution = 50, threads = 0;

  auto* fit = app.add_subcommand("fit", "fit a prior distribution from a specification");
  fit->add_option("--spec", spec_path, "prior specification JSON")->required();
  fit->add_option("--out", out_path, "output distribution JSON")->required();

  auto* update = app.add_subcommand("update", "update a distribution with binary data");
  update->add_option("--dist", dist_path, "distribution JSON")->required();
  update->add_option("--data", data_path, "binary data CSV (headered, m columns of 0/1)")
      ->required();
  update->add_option("--out", out_path, "output distribution JSON")->required();
  update->add_option("--cells-out", cells_out,
                     "also export the multinomial cell counts of the data as CSV");

  auto* region = app.add_subcommand("region", "compute a simultaneous credible region");
  region->add_option("--dist", dist_path, "distribution JSON")->required();
  region->add_option("--method", method, "approximate | copula | extensive");
  region->add_option("--level", level, "credible level 1-alpha");
  region->add_option("--contrast", contrast, "none | all-vs-one");
  region->add_option("--seed", seed, "RNG seed");
  region->add_option("--n-r", n_r, "posterior sample size for sampling-based methods");
  region->add_option("--out", out_path, "output region CSV")->required();

  auto* grid = app.add_subcommand("grid", "export histogram grids of the posterior density");
  grid->add_option("--dist", dist_path, "distribution JSON (must carry gamma)")->required();
  grid->add_option("--pairs", pairs, "semicolon-separated coordinate pairs, e.g. 1,2;1,3");
  grid->add_option("--resolution", resolution, "bins per axis");
  grid->add_option("--n-r", n_r, "posterior sample size");
  grid->add_option("--seed", seed, "RNG seed");
  grid->add_option("--out", out_path, "output grid CSV")->required();

  auto* simulate = app.add_subcommand("simulate", "run a coverage-probability simulation");
  simulate->add_option("--scenario", scenario_path, "scenario JSON")->required();
  simulate->add_option("--threads", threads, "worker threads (0 = hardware)");
  simulate->add_option("--out", out_path, "output results CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(fit)) return cmd_fit(spec_path, out_path, max_full_dim, m_max);
    if (app.got_subcommand(update))
      return cmd_update(dist_path, data_path, out_path, cells_out, m_max);
    if (app.got_subcommand(region))
      return cmd_region(dist_path, method, level, contrast, seed, n_r, out_path, m_max);
    if (app.got_subcommand(grid))
      return cmd_grid(dist_path, pairs, resolution, n_r, seed, out_path, m_max);
    if (app.got_subcommand(simulate)) return cmd_simulate(scenario_path, out_path, threads);
  } catch (const mbeta::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
