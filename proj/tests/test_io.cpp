#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <fstream>

#include "mbeta/io.hpp"
#include "test_support.hpp"

using namespace mbeta;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/mbeta_io_test_") + name;
}

}  // namespace

TEST_CASE("distribution JSON round-trips bit-exactly") {
  Distribution dist;
  dist.red.m = 3;
  dist.red.nu = 20.0 + 1.0 / 3.0;
  dist.red.A = testsup::golden_A_exact();
  dist.gamma = testsup::golden_gamma_exact();
  dist.fit_residual = 1.2345678901234567e-17;
  dist.fit_exact = true;

  const std::string text = to_json(dist).dump();
  const Distribution back = distribution_from_json(json::parse(text));
  REQUIRE(back.red.m == 3);
  REQUIRE(back.red.nu == dist.red.nu);
  REQUIRE(back.red.A == dist.red.A);
  REQUIRE(back.gamma.has_value());
  REQUIRE(*back.gamma == *dist.gamma);
  REQUIRE(*back.fit_residual == *dist.fit_residual);
}

TEST_CASE("prior spec parsing") {
  SECTION("gamma form") {
    const PriorSpec s = prior_spec_from_json(json::parse(R"({"gamma": [1, 2, 3, 4]})"));
    REQUIRE(s.gamma.has_value());
    REQUIRE(s.m == 2);
  }
  SECTION("vague form") {
    const PriorSpec s = prior_spec_from_json(json::parse(R"({"vague": true, "m": 3})"));
    REQUIRE(s.vague);
    REQUIRE(s.m == 3);
  }
  SECTION("moment form with equicorrelation") {
    const PriorSpec s = prior_spec_from_json(json::parse(
        R"({"nu": 20, "mu": [0.8, 0.775, 0.75], "R": {"type": "equicorrelation", "rho": 0.5}})"));
    REQUIRE(s.moments.has_value());
    REQUIRE(s.moments->R(0, 1) == 0.5);
    REQUIRE(s.moments->R(2, 2) == 1.0);
  }
  SECTION("moment form with scalar mu and block R") {
    const PriorSpec s = prior_spec_from_json(json::parse(
        R"({"nu": 20, "mu": 0.75, "m": 10, "R": {"type": "block", "rho": 0.5, "block_size": 5}})"));
    REQUIRE(s.m == 10);
    REQUIRE(s.moments->R(0, 5) == 0.25);
  }
  SECTION("exactly one form is required") {
    REQUIRE_THROWS_MATCHES(
        prior_spec_from_json(json::parse(R"({"gamma": [1,1], "vague": true, "m": 1})")), Error,
        Catch::Matchers::Predicate<Error>(
            [](const Error& e) { return e.code() == errc::parse_error; }));
    REQUIRE_THROWS_AS(prior_spec_from_json(json::parse(R"({})")), Error);
    REQUIRE_THROWS_AS(prior_spec_from_json(json::parse(R"({"gamma": [1, 2, 3]})")), Error);
  }
}

TEST_CASE("scenario parsing with defaults and paper scale") {
  const std::string base = R"({
    "m": 5, "nu_g": 20, "mu_g": 0.75,
    "R_g": {"type": "equicorrelation", "rho": 0.5},
    "n": 400, "analysis_prior": "correct",
    "methods": ["copula", "extensive"], "alpha": 0.05, "seed": 11
  })";
  const Scenario scn = scenario_from_json(json::parse(base));
  CHECK(scn.N_sim == 2000);
  CHECK(scn.n_r == 2000);
  CHECK(scn.methods.size() == 2);
  CHECK(scn.mu_g.size() == 5);
  CHECK(scn.target == SimTarget::raw_proportions);

  json j = json::parse(base);
  j["paper_scale"] = true;
  const Scenario paper = scenario_from_json(j);
  CHECK(paper.N_sim == 50000);
  CHECK(paper.n_r == 10000);

  j["N_sim"] = 123;
  CHECK(scenario_from_json(j).N_sim == 123);

  j["methods"] = json::array({"bogus"});
  REQUIRE_THROWS_AS(scenario_from_json(j), Error);
}

TEST_CASE("binary CSV reader") {
  SECTION("valid file") {
    const std::string path = temp_path("ok.csv");
    write_text_file(path, "a,b,c\n0,1,1\n1,0,0\n\n0,0,1\n");
    const BinaryData data = read_binary_csv(path);
    REQUIRE(data.n == 3);
    REQUIRE(data.m == 3);
    REQUIRE(data(0, 1) == 1);
    REQUIRE(data(2, 2) == 1);
    std::remove(path.c_str());
  }
  SECTION("non-binary entry") {
    const std::string path = temp_path("bad.csv");
    write_text_file(path, "a,b\n0,2\n");
    REQUIRE_THROWS_MATCHES(read_binary_csv(path), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::non_binary_entry;
                           }));
    std::remove(path.c_str());
  }
  SECTION("column mismatch") {
    const std::string path = temp_path("cols.csv");
    write_text_file(path, "a,b\n0,1,1\n");
    REQUIRE_THROWS_AS(read_binary_csv(path), Error);
    std::remove(path.c_str());
  }
  SECTION("missing file") {
    REQUIRE_THROWS_MATCHES(read_binary_csv("/nonexistent/x.csv"), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::io_error;
                           }));
  }
}

TEST_CASE("cell counts CSV") {
  CellCounts cc;
  cc.d = {0, 1, 0, 2};
  cc.n = 3;
  const std::string csv = cell_counts_csv(cc, 2);
  CHECK(csv == "cell_index,outcome_bits,count\n1,00,0\n2,01,1\n3,10,0\n4,11,2\n");
}

TEST_CASE("region CSV carries the documented columns") {
  CredibleRegion cr;
  cr.method = RegionMethod::copula;
  cr.level = 0.95;
  cr.lower = (Eigen::VectorXd(2) << 0.25, 0.5).finished();
  cr.upper = (Eigen::VectorXd(2) << 0.75, 0.875).finished();
  cr.labels = {"theta_1", "theta_2"};
  cr.c_alpha = 2.25;
  cr.alpha_tilde = 0.0125;
  cr.n_r = 0;
  cr.in_support = true;
  const std::string csv = region_csv(cr);
  CHECK(csv.find("coordinate_or_contrast_label,lower,upper,method,level,c_alpha,"
                 "alpha_tilde,n_r,contains_unit_cube") == 0);
  CHECK(csv.find("theta_1,0.25,0.75,copula,0.95,2.25,0.0125,,1") != std::string::npos);
}

TEST_CASE("simulation CSV is long-format per method") {
  SimResult res;
  res.scenario.id = "demo";
  res.scenario.n = 50;
  res.scenario.methods = {RegionMethod::approximate, RegionMethod::copula};
  res.per_method.resize(2);
  res.per_method[0].runs = 100;
  res.per_method[0].covered = 90;
  res.per_method[1].runs = 100;
  res.per_method[1].covered = 95;
  const std::string csv = sim_result_csv(res);
  CHECK(csv.find("scenario_id,method,target,analysis_prior,n,bcp,se,frac_outside,runs,failures") ==
        0);
  CHECK(csv.find("demo,approximate,raw,correct,50,0.9,") != std::string::npos);
  CHECK(csv.find("demo,copula,raw,correct,50,0.95,") != std::string::npos);
}

TEST_CASE("fmt_double round-trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, 2.2364766445577895, 1e-17, 12345.6789}) {
    CHECK(std::stod(fmt_double(v)) == v);
  }
}
