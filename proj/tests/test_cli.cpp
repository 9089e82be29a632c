// End-to-end tests of the command-line tool: every command is exercised
// through the filesystem exactly as a user would run it, including the exit
// code contract (0 success, 1 I/O/parse error, 2 statistical infeasibility).

#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "mbeta/io.hpp"
#include "test_support.hpp"

namespace {

const std::string cli = MBETA_CLI_PATH;

struct TempDir {
  std::string path;
  TempDir() {
    char tmpl[] = "/tmp/mbeta_cli_XXXXXX";
    path = mkdtemp(tmpl);
  }
  ~TempDir() { std::system(("rm -rf " + path).c_str()); }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

int run(const std::string& args) {
  const int status = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("cli: fit the worked-example prior and update with its data") {
  TempDir dir;
  write(dir.file("prior.json"),
        R"({"nu": 20, "mu": [0.8, 0.775, 0.75], "R": {"type": "equicorrelation", "rho": 0.5}})");
  REQUIRE(run("fit --spec " + dir.file("prior.json") + " --out " + dir.file("dist.json")) == 0);

  const auto dist = mbeta::distribution_from_json(mbeta::json::parse(slurp(dir.file("dist.json"))));
  REQUIRE(dist.gamma.has_value());
  CHECK((*dist.gamma - testsup::golden_gamma_reference()).cwiseAbs().maxCoeff() < 0.01);
  CHECK(*dist.fit_exact);

  // Data matrix whose cell counts equal the reference d.
  std::ostringstream data;
  data << "y1,y2,y3\n";
  const auto counts = testsup::golden_counts();
  for (std::size_t k = 0; k < counts.d.size(); ++k) {
    const auto bits = mbeta::decode_outcome(3, k + 1);
    for (std::int64_t i = 0; i < counts.d[k]; ++i)
      data << int(bits[0]) << "," << int(bits[1]) << "," << int(bits[2]) << "\n";
  }
  write(dir.file("data.csv"), data.str());
  REQUIRE(run("update --dist " + dir.file("dist.json") + " --data " + dir.file("data.csv") +
              " --out " + dir.file("post.json")) == 0);

  const auto post = mbeta::distribution_from_json(mbeta::json::parse(slurp(dir.file("post.json"))));
  CHECK(post.red.nu == Catch::Approx(337.0).margin(1e-9));
  const Eigen::MatrixXd expect = testsup::golden_A_exact() + testsup::golden_U();
  CHECK((post.red.A - expect).cwiseAbs().maxCoeff() < 1e-8);

  SECTION("cell-count export matches the reference counts") {
    REQUIRE(run("update --dist " + dir.file("dist.json") + " --data " + dir.file("data.csv") +
                " --out " + dir.file("post2.json") + " --cells-out " + dir.file("cells.csv")) ==
            0);
    const std::string csv = slurp(dir.file("cells.csv"));
    CHECK(csv.find("cell_index,outcome_bits,count") == 0);
    CHECK(csv.find("1,000,24") != std::string::npos);
    CHECK(csv.find("3,010,0") != std::string::npos);
    CHECK(csv.find("8,111,179") != std::string::npos);
  }

  SECTION("empty data leaves the distribution unchanged") {
    write(dir.file("empty.csv"), "y1,y2,y3\n");
    REQUIRE(run("update --dist " + dir.file("dist.json") + " --data " + dir.file("empty.csv") +
                " --out " + dir.file("same.json")) == 0);
    const auto same =
        mbeta::distribution_from_json(mbeta::json::parse(slurp(dir.file("same.json"))));
    CHECK((same.red.A - dist.red.A).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(*same.gamma == *dist.gamma);
  }

  SECTION("sequential updates equal one concatenated update") {
    // Split the data file into two halves.
    const std::string all = data.str();
    std::istringstream in(all);
    std::string line, head;
    std::getline(in, head);
    std::vector<std::string> rows;
    while (std::getline(in, line))
      if (!line.empty()) rows.push_back(line);
    std::ostringstream d1, d2;
    d1 << head << "\n";
    d2 << head << "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) ((i < rows.size() / 2) ? d1 : d2) << rows[i] << "\n";
    write(dir.file("d1.csv"), d1.str());
    write(dir.file("d2.csv"), d2.str());
    REQUIRE(run("update --dist " + dir.file("dist.json") + " --data " + dir.file("d1.csv") +
                " --out " + dir.file("p1.json")) == 0);
    REQUIRE(run("update --dist " + dir.file("p1.json") + " --data " + dir.file("d2.csv") +
                " --out " + dir.file("p2.json")) == 0);
    const auto once =
        mbeta::distribution_from_json(mbeta::json::parse(slurp(dir.file("post.json"))));
    const auto twice =
        mbeta::distribution_from_json(mbeta::json::parse(slurp(dir.file("p2.json"))));
    CHECK(*once.gamma == *twice.gamma);  // integer counts: bitwise agreement
    CHECK(once.red.A == twice.red.A);
  }

  SECTION("regions by all three methods stay in the unit cube where promised") {
    for (const std::string method : {"approximate", "copula", "extensive"}) {
      REQUIRE(run("region --dist " + dir.file("post.json") + " --method " + method +
                  " --level 0.95 --seed 5 --n-r 2000 --out " + dir.file(method + ".csv")) == 0);
      const std::string csv = slurp(dir.file(method + ".csv"));
      REQUIRE(csv.find("coordinate_or_contrast_label") == 0);
    }
    // copula/extensive bounds lie inside (0,1): re-read and check.
    for (const std::string method : {"copula", "extensive"}) {
      std::istringstream in(slurp(dir.file(method + ".csv")));
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string label, lo, hi;
        std::getline(ls, label, ',');
        std::getline(ls, lo, ',');
        std::getline(ls, hi, ',');
        CHECK(std::stod(lo) > 0.0);
        CHECK(std::stod(hi) < 1.0);
      }
    }
  }

  SECTION("region is deterministic under a fixed seed") {
    REQUIRE(run("region --dist " + dir.file("post.json") +
                " --method extensive --seed 42 --n-r 2000 --out " + dir.file("r1.csv")) == 0);
    REQUIRE(run("region --dist " + dir.file("post.json") +
                " --method extensive --seed 42 --n-r 2000 --out " + dir.file("r2.csv")) == 0);
    CHECK(slurp(dir.file("r1.csv")) == slurp(dir.file("r2.csv")));
  }

  SECTION("all-vs-one contrast region has m-1 rows") {
    REQUIRE(run("region --dist " + dir.file("post.json") +
                " --method copula --contrast all-vs-one --seed 3 --n-r 2000 --out " +
                dir.file("contrast.csv")) == 0);
    const std::string csv = slurp(dir.file("contrast.csv"));
    CHECK(csv.find("theta_1-theta_3") != std::string::npos);
    CHECK(csv.find("theta_2-theta_3") != std::string::npos);
    int rows = -1;  // header
    for (char ch : csv)
      if (ch == '\n') ++rows;
    CHECK(rows == 2);
  }

  SECTION("grid masses normalize per pair") {
    REQUIRE(run("grid --dist " + dir.file("post.json") +
                " --pairs 1,2 --resolution 10 --n-r 5000 --seed 9 --out " +
                dir.file("grid.csv")) == 0);
    std::istringstream in(slurp(dir.file("grid.csv")));
    std::string line;
    std::getline(in, line);
    double pair_mass = 0.0, marg1_mass = 0.0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ls(line);
      std::string kind, ca, cb, ba, bb, mass;
      std::getline(ls, kind, ',');
      std::getline(ls, ca, ',');
      std::getline(ls, cb, ',');
      std::getline(ls, ba, ',');
      std::getline(ls, bb, ',');
      std::getline(ls, mass, ',');
      if (kind == "pair") pair_mass += std::stod(mass);
      if (kind == "marginal" && ca == "1") marg1_mass += std::stod(mass);
    }
    CHECK(pair_mass == Catch::Approx(1.0).margin(1e-12));
    CHECK(marg1_mass == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("cli: vague prior specification") {
  TempDir dir;
  write(dir.file("vague.json"), R"({"vague": true, "m": 3})");
  REQUIRE(run("fit --spec " + dir.file("vague.json") + " --out " + dir.file("v.json")) == 0);
  const auto dist = mbeta::distribution_from_json(mbeta::json::parse(slurp(dir.file("v.json"))));
  REQUIRE(dist.gamma.has_value());
  CHECK((dist.gamma->array() - 0.25).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cli: exit codes") {
  TempDir dir;

  SECTION("missing input file is an I/O error (1)") {
    CHECK(run("fit --spec /nonexistent.json --out " + dir.file("x.json")) == 1);
  }
  SECTION("malformed JSON is a parse error (1)") {
    write(dir.file("bad.json"), "{nope");
    CHECK(run("fit --spec " + dir.file("bad.json") + " --out " + dir.file("x.json")) == 1);
  }
  SECTION("correlation outside the pairwise bounds is infeasible (2)") {
    write(dir.file("inf.json"),
          R"({"nu": 10, "mu": [0.9, 0.5], "R": {"type": "equicorrelation", "rho": -0.6}})");
    CHECK(run("fit --spec " + dir.file("inf.json") + " --out " + dir.file("rep.json")) == 2);
    const auto rep = mbeta::json::parse(slurp(dir.file("rep.json")));
    CHECK(rep.at("admissibility").at("status") == "infeasible");
    CHECK(rep.at("admissibility").contains("certificate"));
    CHECK(rep.at("admissibility").contains("violated_bounds"));
  }
  SECTION("extensive region without gamma is unavailable (2)") {
    mbeta::Distribution reduced;
    reduced.red.m = 2;
    reduced.red.nu = 10.0;
    reduced.red.A = (Eigen::MatrixXd(2, 2) << 6.0, 4.0, 4.0, 7.0).finished();
    mbeta::write_text_file(dir.file("red.json"), mbeta::to_json(reduced).dump());
    CHECK(run("region --dist " + dir.file("red.json") + " --method extensive --out " +
              dir.file("r.csv")) == 2);
  }
  SECTION("data dimension mismatch is an input error (1)") {
    write(dir.file("vague.json"), R"({"vague": true, "m": 3})");
    REQUIRE(run("fit --spec " + dir.file("vague.json") + " --out " + dir.file("v.json")) == 0);
    write(dir.file("two.csv"), "a,b\n0,1\n");
    CHECK(run("update --dist " + dir.file("v.json") + " --data " + dir.file("two.csv") +
              " --out " + dir.file("x.json")) == 1);
  }
  SECTION("unknown arguments fail with 1") {
    CHECK(run("region --bogus") == 1);
  }
}

TEST_CASE("cli: reduced pipeline for high dimensions checks Frechet bounds only") {
  TempDir dir;
  write(dir.file("big.json"),
        R"({"nu": 20, "mu": 0.75, "m": 12, "R": {"type": "block", "rho": 0.5, "block_size": 6}})");
  REQUIRE(run("fit --spec " + dir.file("big.json") + " --out " + dir.file("big_out.json")) == 0);
  const auto out = mbeta::json::parse(slurp(dir.file("big_out.json")));
  CHECK_FALSE(out.contains("gamma"));  // reduced parametrisation only
  CHECK(out.at("m") == 12);
  CHECK(out.at("admissibility").at("status") == "unverified");
}

TEST_CASE("cli: smoke simulation run") {
  TempDir dir;
  write(dir.file("scn.json"), R"({
    "id": "smoke", "m": 2, "nu_g": 10, "mu_g": 0.7,
    "R_g": {"type": "equicorrelation", "rho": 0.3},
    "n": 30, "analysis_prior": "vague",
    "methods": ["approximate", "copula"],
    "alpha": 0.05, "N_sim": 10, "seed": 3, "n_r": 1000
  })");
  REQUIRE(run("simulate --scenario " + dir.file("scn.json") + " --threads 2 --out " +
              dir.file("sim.csv")) == 0);
  const std::string csv = slurp(dir.file("sim.csv"));
  CHECK(csv.find("smoke,approximate,raw,vague,30,") != std::string::npos);
  CHECK(csv.find("smoke,copula,raw,vague,30,") != std::string::npos);

  SECTION("N_sim = 1 produces a 1-row-per-method CSV deterministically") {
    write(dir.file("one.json"), R"({
      "id": "one", "m": 2, "nu_g": 10, "mu_g": 0.7,
      "R_g": {"type": "equicorrelation", "rho": 0.3},
      "n": 30, "analysis_prior": "correct",
      "methods": ["copula"], "alpha": 0.05, "N_sim": 1, "seed": 12
    })");
    REQUIRE(run("simulate --scenario " + dir.file("one.json") + " --out " + dir.file("s1.csv")) ==
            0);
    REQUIRE(run("simulate --scenario " + dir.file("one.json") + " --out " + dir.file("s2.csv")) ==
            0);
    CHECK(slurp(dir.file("s1.csv")) == slurp(dir.file("s2.csv")));
  }

  SECTION("infeasible generative prior exits 2") {
    write(dir.file("badscn.json"), R"({
      "id": "bad", "m": 2, "nu_g": 10, "mu_g": [0.9, 0.5],
      "R_g": {"type": "equicorrelation", "rho": -0.6},
      "n": 30, "analysis_prior": "correct",
      "methods": ["copula"], "alpha": 0.05, "N_sim": 5, "seed": 1
    })");
    CHECK(run("simulate --scenario " + dir.file("badscn.json") + " --out " + dir.file("b.csv")) ==
          2);
  }
}
