#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mbeta/mbeta.hpp"
#include "mbeta/sampling.hpp"
#include "test_support.hpp"

using namespace mbeta;

TEST_CASE("moment_matrix reproduces the worked-example reduced form") {
  const auto basis = testsup::basis3();

  SECTION("reference gamma to reference A (2 decimals)") {
    const MBetaFull full = make_full(basis, testsup::golden_gamma_reference());
    const MBetaReduced red = moment_matrix(full);
    CHECK(red.nu == Catch::Approx(20.0).margin(0.011));  // reference entries are rounded
    const Eigen::MatrixXd expected = testsup::golden_A_exact();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(red.A(i, j) == Catch::Approx(expected(i, j)).margin(0.01));
  }
  SECTION("exact gamma to exact A") {
    const MBetaFull full = make_full(basis, testsup::golden_gamma_exact());
    const MBetaReduced red = moment_matrix(full);
    CHECK(red.nu == Catch::Approx(20.0).margin(1e-12));
    const Eigen::MatrixXd expected = testsup::golden_A_exact();
    CHECK((red.A - expected).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("moment_matrix of the uniform and single-cell parameters") {
  for (int m : {2, 3, 4}) {
    auto basis = std::make_shared<const HBasis>(build_basis(m));
    const double nu = 6.0;
    const auto w = static_cast<Eigen::Index>(basis->w);

    const MBetaFull unif{basis, Eigen::VectorXd::Constant(w, nu / static_cast<double>(w))};
    const MBetaReduced red_u = moment_matrix(unif);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        CHECK(red_u.A(i, j) == Catch::Approx(i == j ? nu / 2.0 : nu / 4.0).margin(1e-12));

    Eigen::VectorXd point = Eigen::VectorXd::Zero(w);
    point(w - 1) = nu;  // cell encoding (1,...,1)
    const MBetaReduced red_p = moment_matrix(MBetaFull{basis, point});
    CHECK((red_p.A.array() - nu).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("marginal_params on prior, posterior and vague forms") {
  MBetaReduced prior{3, 20.0, testsup::golden_A_exact()};
  const auto ab = marginal_params(prior);
  CHECK(ab[0].first == Catch::Approx(16.0));
  CHECK(ab[0].second == Catch::Approx(4.0));
  CHECK(ab[1].first == Catch::Approx(15.5));
  CHECK(ab[1].second == Catch::Approx(4.5));
  CHECK(ab[2].first == Catch::Approx(15.0));
  CHECK(ab[2].second == Catch::Approx(5.0));

  MBetaReduced post{3, 337.0, testsup::golden_A_exact() + testsup::golden_U()};
  const auto ab2 = marginal_params(post);
  CHECK(ab2[0].first == Catch::Approx(270.0));
  CHECK(ab2[0].second == Catch::Approx(67.0));
  CHECK(ab2[1].first == Catch::Approx(281.5));
  CHECK(ab2[1].second == Catch::Approx(55.5));
  CHECK(ab2[2].first == Catch::Approx(241.0));
  CHECK(ab2[2].second == Catch::Approx(96.0));

  const MBetaFull vague = vague_full(testsup::basis3());
  const auto ab3 = marginal_params(moment_matrix(vague));
  for (const auto& [a, b] : ab3) {
    CHECK(a == Catch::Approx(1.0).margin(1e-12));
    CHECK(b == Catch::Approx(1.0).margin(1e-12));
  }

  MBetaReduced degenerate{2, 2.0, (Eigen::MatrixXd(2, 2) << 2.0, 1.0, 1.0, 1.0).finished()};
  REQUIRE_THROWS_MATCHES(marginal_params(degenerate), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == errc::degenerate_marginal;
                         }));
}

TEST_CASE("mean_cov reproduces the posterior summary") {
  MBetaReduced post{3, 337.0, testsup::golden_A_exact() + testsup::golden_U()};
  const MomentSummary mom = mean_cov(post);
  const Eigen::VectorXd mu_exp = testsup::golden_mu_posterior();
  for (int j = 0; j < 3; ++j) CHECK(mom.mu(j) == Catch::Approx(mu_exp(j)).margin(1e-6));

  const Eigen::MatrixXd R_exp = testsup::golden_R_posterior();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(mom.R(i, j) == Catch::Approx(R_exp(i, j)).margin(0.005));

  // Var(theta_1) = 270*67 / (337^2 * 338)
  CHECK(mom.Sigma(0, 0) == Catch::Approx(0.00047126161240454347).epsilon(1e-12));
}

TEST_CASE("mean_cov posterior variance agrees with Monte Carlo") {
  const auto basis = testsup::basis3();
  const Eigen::VectorXd gamma_star =
      testsup::golden_gamma_exact() + testsup::golden_counts().as_vector();
  const MBetaFull post = make_full(basis, gamma_star);
  const MomentSummary mom = mean_cov(moment_matrix(post));

  RngStream rng(99);
  const int n = 100000;
  const Eigen::MatrixXd sp = sample_dirichlet(post.gamma, n, rng);
  const Eigen::MatrixXd theta = sp * basis->H.transpose();
  const double mean1 = theta.col(0).mean();
  const double var1 = (theta.col(0).array() - mean1).square().sum() / (n - 1);
  // Var of the sample variance ~ 2 sigma^4 / n for near-Gaussian marginals.
  const double se_var = std::sqrt(2.0 / n) * mom.Sigma(0, 0) * 1.5;
  CHECK(var1 == Catch::Approx(mom.Sigma(0, 0)).margin(3.0 * se_var));
}

TEST_CASE("independence structure gives diagonal covariance") {
  const double nu = 9.0;
  for (int m : {2, 4}) {
    MBetaReduced red{m, nu, Eigen::MatrixXd::Constant(m, m, nu / 4.0)};
    red.A.diagonal().setConstant(nu / 2.0);
    const MomentSummary mom = mean_cov(red);
    for (int i = 0; i < m; ++i) {
      CHECK(mom.Sigma(i, i) == Catch::Approx(0.25 / (nu + 1.0)).margin(1e-12));
      for (int j = 0; j < m; ++j)
        if (i != j) CHECK(mom.Sigma(i, j) == Catch::Approx(0.0).margin(1e-14));
    }
  }
}

TEST_CASE("aggregation: empirical mean of H p matches alpha/nu") {
  const auto basis = testsup::basis3();
  const MBetaFull prior = make_full(basis, testsup::golden_gamma_exact());
  const MomentSummary mom = mean_cov(moment_matrix(prior));
  RngStream rng(123);
  const int n = 100000;
  const Eigen::MatrixXd sp = sample_dirichlet(prior.gamma, n, rng);
  const Eigen::MatrixXd theta = sp * basis->H.transpose();
  for (int j = 0; j < 3; ++j) {
    const double se = std::sqrt(mom.Sigma(j, j) / n);
    CHECK(theta.col(j).mean() == Catch::Approx(mom.mu(j)).margin(3.0 * se));
  }
}

TEST_CASE("product_beta_params on the worked example") {
  const MBetaFull prior = make_full(testsup::basis3(), testsup::golden_gamma_exact());
  const auto [a1, b1] = product_beta_params(prior, {1});
  CHECK(a1 == Catch::Approx(16.0).margin(1e-9));
  CHECK(b1 == Catch::Approx(4.0).margin(1e-9));

  const auto [a12, b12] = product_beta_params(prior, {1, 2});
  CHECK(a12 == Catch::Approx(testsup::golden_A_exact()(0, 1)).margin(1e-9));

  const auto [a123, b123] = product_beta_params(prior, {1, 2, 3});
  CHECK(a123 == Catch::Approx(testsup::golden_gamma_exact()(7)).margin(1e-9));
}

TEST_CASE("update_full matches the reference posterior parameter") {
  const MBetaFull prior = make_full(testsup::basis3(), testsup::golden_gamma_reference());
  const MBetaFull post = update_full(prior, testsup::golden_counts());
  Eigen::VectorXd expected(8);
  expected << 26.57, 10.00, 0.16, 30.27, 9.36, 9.57, 59.91, 191.17;
  CHECK((post.gamma - expected).cwiseAbs().maxCoeff() < 1e-12);

  const MBetaFull unchanged = update_full(prior, CellCounts{std::vector<std::int64_t>(8, 0), 0});
  CHECK(unchanged.gamma == prior.gamma);

  CellCounts wrong{std::vector<std::int64_t>(4, 0), 0};
  REQUIRE_THROWS_MATCHES(update_full(prior, wrong), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == errc::length_mismatch;
                         }));
}

TEST_CASE("update additivity over batches") {
  RngStream rng(3);
  const auto basis = testsup::basis3();
  const MBetaFull prior = make_full(basis, testsup::golden_gamma_exact());
  const CellCounts d1 = testsup::random_counts(3, 40, rng);
  const CellCounts d2 = testsup::random_counts(3, 25, rng);
  CellCounts both;
  both.d.resize(8);
  for (std::size_t k = 0; k < 8; ++k) both.d[k] = d1.d[k] + d2.d[k];
  both.n = d1.n + d2.n;
  const MBetaFull seq = update_full(update_full(prior, d1), d2);
  const MBetaFull once = update_full(prior, both);
  CHECK(seq.gamma == once.gamma);
}

TEST_CASE("update_reduced matches the reference update matrix") {
  const auto basis = testsup::basis3();
  MBetaReduced prior{3, 20.0, testsup::golden_A_exact()};
  const MBetaReduced post = update_reduced(prior, testsup::golden_counts(), *basis);
  CHECK(post.nu == 337.0);
  CHECK((post.A - (testsup::golden_A_exact() + testsup::golden_U())).cwiseAbs().maxCoeff() <
        1e-10);

  const MBetaReduced unchanged =
      update_reduced(prior, CellCounts{std::vector<std::int64_t>(8, 0), 0}, *basis);
  CHECK(unchanged.nu == prior.nu);
  CHECK(unchanged.A == prior.A);
}

TEST_CASE("full and reduced update paths commute exactly") {
  RngStream rng(4);
  for (int rep = 0; rep < 200; ++rep) {
    const int m = 1 + static_cast<int>(rng.next_u64() % 4);
    auto basis = std::make_shared<const HBasis>(build_basis(m));
    // Dyadic gamma entries keep both floating-point paths exact, so the
    // comparison below can demand bitwise equality.
    const Eigen::VectorXd g = testsup::random_dyadic_gamma(m, rng);
    const CellCounts d = testsup::random_counts(m, 1 + rng.next_u64() % 500, rng);
    const MBetaFull full{basis, g};
    const MBetaReduced via_full = moment_matrix(update_full(full, d));
    const MBetaReduced via_reduced = update_reduced(moment_matrix(full), d, *basis);
    REQUIRE(via_full.nu == via_reduced.nu);
    REQUIRE(via_full.A == via_reduced.A);
  }
}
