#pragma once

// File formats: distribution and prior-spec JSON documents, scenario JSON,
// and the CSV reader/writers for binary data matrices, cell counts, credible
// regions, simulation results, and density grids.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mbeta/binmap.hpp"
#include "mbeta/errors.hpp"
#include "mbeta/mbeta.hpp"
#include "mbeta/regions.hpp"
#include "mbeta/simharness.hpp"

namespace mbeta {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Small helpers

inline std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);  // shortest round-trip representation
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::io_error, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(errc::parse_error, "invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  require(out.good(), errc::io_error, "cannot write " + path);
  out << text;
  require(out.good(), errc::io_error, "write failed for " + path);
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  require(j.is_array(), errc::parse_error, "expected a JSON array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

// ---------------------------------------------------------------------------
// Distribution JSON: {"m", "nu", "A" (row-major), "gamma"?} plus optional fit
// metadata "fit_residual"/"fit_exact" and an "admissibility" report.

struct Distribution {
  MBetaReduced red;
  std::optional<Eigen::VectorXd> gamma;
  std::optional<double> fit_residual;
  std::optional<bool> fit_exact;

  bool has_gamma() const { return gamma.has_value(); }
};

inline json to_json(const Distribution& dist) {
  json j;
  j["m"] = dist.red.m;
  j["nu"] = dist.red.nu;
  json a = json::array();
  for (int i = 0; i < dist.red.m; ++i)
    for (int k = 0; k < dist.red.m; ++k) a.push_back(dist.red.A(i, k));
  j["A"] = std::move(a);
  if (dist.gamma) j["gamma"] = vector_to_json(*dist.gamma);
  if (dist.fit_residual) j["fit_residual"] = *dist.fit_residual;
  if (dist.fit_exact) j["fit_exact"] = *dist.fit_exact;
  return j;
}

inline Distribution distribution_from_json(const json& j) {
  require(j.contains("m") && j.contains("nu") && j.contains("A"), errc::parse_error,
          "distribution JSON needs fields m, nu, A");
  Distribution dist;
  dist.red.m = j.at("m").get<int>();
  dist.red.nu = j.at("nu").get<double>();
  const auto& a = j.at("A");
  require(a.is_array() && a.size() == static_cast<std::size_t>(dist.red.m) * dist.red.m,
          errc::parse_error, "field A must hold m*m row-major entries");
  dist.red.A.resize(dist.red.m, dist.red.m);
  for (int i = 0; i < dist.red.m; ++i)
    for (int k = 0; k < dist.red.m; ++k)
      dist.red.A(i, k) = a[static_cast<std::size_t>(i) * dist.red.m + k].get<double>();
  if (j.contains("gamma")) dist.gamma = vector_from_json(j.at("gamma"));
  if (j.contains("fit_residual")) dist.fit_residual = j.at("fit_residual").get<double>();
  if (j.contains("fit_exact")) dist.fit_exact = j.at("fit_exact").get<bool>();
  return dist;
}

// ---------------------------------------------------------------------------
// Prior specification: exactly one of
//   {"gamma": [...]}
//   {"nu": .., "mu": [..] | number, "R": {"type": ..}, "m"?}
//   {"vague": true, "m": ..}

struct PriorSpec {
  std::optional<Eigen::VectorXd> gamma;
  std::optional<MomentTarget> moments;
  bool vague = false;
  int m = 0;
};

inline CorrelationSpec correlation_spec_from_json(const json& j) {
  require(j.is_object() && j.contains("type"), errc::parse_error,
          "R specification needs a type field");
  CorrelationSpec cs;
  const std::string type = j.at("type").get<std::string>();
  if (type == "equicorrelation") {
    cs.kind = CorrelationSpec::Kind::equicorrelation;
    cs.rho = j.at("rho").get<double>();
  } else if (type == "block") {
    cs.kind = CorrelationSpec::Kind::block;
    cs.rho = j.at("rho").get<double>();
    cs.block_size = j.value("block_size", 5);
    require(cs.block_size >= 1, errc::parse_error, "block_size must be >= 1");
  } else if (type == "full") {
    cs.kind = CorrelationSpec::Kind::full;
    const auto& rows = j.at("values");
    require(rows.is_array() && !rows.empty(), errc::parse_error, "R values must be a 2-D array");
    const auto m = static_cast<Eigen::Index>(rows.size());
    cs.values.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      require(rows[static_cast<std::size_t>(i)].size() == static_cast<std::size_t>(m),
              errc::parse_error, "R values must be square");
      for (Eigen::Index k = 0; k < m; ++k)
        cs.values(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
  } else {
    fail(errc::parse_error, "unknown correlation type: " + type);
  }
  return cs;
}

inline PriorSpec prior_spec_from_json(const json& j) {
  PriorSpec spec;
  const int forms = static_cast<int>(j.contains("gamma")) +
                    static_cast<int>(j.contains("nu") || j.contains("mu") || j.contains("R")) +
                    static_cast<int>(j.value("vague", false));
  require(forms == 1, errc::parse_error,
          "prior spec must use exactly one of gamma / (nu, mu, R) / vague forms");
  if (j.contains("gamma")) {
    spec.gamma = vector_from_json(j.at("gamma"));
    const auto w = spec.gamma->size();
    require(w >= 2 && (w & (w - 1)) == 0, errc::parse_error, "gamma length must be a power of 2");
    spec.m = 0;
    for (auto t = w; t > 1; t >>= 1) ++spec.m;
    return spec;
  }
  if (j.value("vague", false)) {
    spec.vague = true;
    require(j.contains("m"), errc::parse_error, "vague prior spec needs m");
    spec.m = j.at("m").get<int>();
    require(spec.m >= 1, errc::parse_error, "m must be >= 1");
    return spec;
  }
  require(j.contains("nu") && j.contains("mu") && j.contains("R"), errc::parse_error,
          "moment prior spec needs nu, mu and R");
  MomentTarget t;
  t.nu = j.at("nu").get<double>();
  if (j.at("mu").is_array()) {
    t.mu = vector_from_json(j.at("mu"));
  } else {
    require(j.contains("m"), errc::parse_error, "scalar mu needs an explicit m");
    t.mu = Eigen::VectorXd::Constant(j.at("m").get<int>(), j.at("mu").get<double>());
  }
  spec.m = static_cast<int>(t.mu.size());
  t.R = correlation_spec_from_json(j.at("R")).build(spec.m);
  spec.moments = std::move(t);
  return spec;
}

// ---------------------------------------------------------------------------
// Scenario JSON, mirroring the Scenario fields.

inline Scenario scenario_from_json(const json& j) {
  Scenario scn;
  scn.id = j.value("id", std::string("scenario"));
  scn.m = j.at("m").get<int>();
  scn.nu_g = j.at("nu_g").get<double>();
  if (j.at("mu_g").is_array())
    scn.mu_g = vector_from_json(j.at("mu_g"));
  else
    scn.mu_g = Eigen::VectorXd::Constant(scn.m, j.at("mu_g").get<double>());
  scn.R_g = correlation_spec_from_json(j.at("R_g"));
  scn.n = j.at("n").get<std::int64_t>();
  const std::string prior = j.value("analysis_prior", std::string("correct"));
  if (prior == "correct") scn.analysis_prior = AnalysisPrior::correct;
  else if (prior == "vague") scn.analysis_prior = AnalysisPrior::vague;
  else fail(errc::parse_error, "analysis_prior must be correct or vague");
  scn.methods.clear();
  for (const auto& ms : j.at("methods")) {
    const std::string name = ms.get<std::string>();
    if (name == "approximate") scn.methods.push_back(RegionMethod::approximate);
    else if (name == "copula") scn.methods.push_back(RegionMethod::copula);
    else if (name == "extensive") scn.methods.push_back(RegionMethod::extensive);
    else fail(errc::parse_error, "unknown method: " + name);
  }
  const std::string target = j.value("target", std::string("raw"));
  if (target == "raw") scn.target = SimTarget::raw_proportions;
  else if (target == "all_vs_one") scn.target = SimTarget::all_vs_one_differences;
  else fail(errc::parse_error, "target must be raw or all_vs_one");
  scn.alpha = j.value("alpha", 0.05);
  const bool paper_scale = j.value("paper_scale", false);
  scn.N_sim = j.value("N_sim", paper_scale ? 50000LL : 2000LL);
  scn.n_r = j.value("n_r", paper_scale ? 10000LL : 2000LL);
  scn.seed = j.value("seed", 0ULL);
  return scn;
}

// ---------------------------------------------------------------------------
// CSV

// Binary data matrix: headered CSV, one row per observation, m columns of 0/1.
inline BinaryData read_binary_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::io_error, "cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), errc::parse_error,
          path + " is empty (expected a header row)");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') { out.push_back(cur); cur.clear(); }
      else if (ch != '\r' && ch != ' ' && ch != '\t') cur.push_back(ch);
    }
    out.push_back(cur);
    return out;
  };
  BinaryData data;
  data.m = static_cast<int>(split(line).size());
  require(data.m >= 1, errc::parse_error, "header row has no columns");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    require(static_cast<int>(cells.size()) == data.m, errc::parse_error,
            path + ":" + std::to_string(lineno) + ": expected " + std::to_string(data.m) +
                " columns");
    for (const auto& cell : cells) {
      if (cell == "0") data.values.push_back(0);
      else if (cell == "1") data.values.push_back(1);
      else fail(errc::non_binary_entry,
                path + ":" + std::to_string(lineno) + ": entry '" + cell + "' is not 0/1");
    }
    ++data.n;
  }
  return data;
}

// Cell counts: (cell_index, outcome_bits, count).
inline std::string cell_counts_csv(const CellCounts& cc, int m) {
  std::ostringstream os;
  os << "cell_index,outcome_bits,count\n";
  for (std::size_t k = 0; k < cc.d.size(); ++k)
    os << (k + 1) << "," << outcome_bits(m, k + 1) << "," << cc.d[k] << "\n";
  return os.str();
}

// Region CSV per the external interface:
// (coordinate_or_contrast_label, lower, upper, method, level, c_alpha,
//  alpha_tilde, n_r, contains_unit_cube)
inline std::string region_csv(const CredibleRegion& cr) {
  std::ostringstream os;
  os << "coordinate_or_contrast_label,lower,upper,method,level,c_alpha,alpha_tilde,n_r,"
        "contains_unit_cube\n";
  for (Eigen::Index j = 0; j < cr.lower.size(); ++j) {
    os << cr.labels[static_cast<std::size_t>(j)] << "," << fmt_double(cr.lower(j)) << ","
       << fmt_double(cr.upper(j)) << "," << method_name(cr.method) << "," << fmt_double(cr.level)
       << ",";
    if (std::isfinite(cr.c_alpha)) os << fmt_double(cr.c_alpha);
    os << ",";
    if (std::isfinite(cr.alpha_tilde)) os << fmt_double(cr.alpha_tilde);
    os << "," << (cr.n_r > 0 ? std::to_string(cr.n_r) : std::string()) << ","
       << (cr.in_support ? 1 : 0) << "\n";
  }
  return os.str();
}

// Simulation results: long format, one row per method.
inline std::string sim_result_csv(const SimResult& res) {
  std::ostringstream os;
  os << "scenario_id,method,target,analysis_prior,n,bcp,se,frac_outside,runs,failures\n";
  for (std::size_t mi = 0; mi < res.scenario.methods.size(); ++mi) {
    const MethodStats& st = res.per_method[mi];
    os << res.scenario.id << "," << method_name(res.scenario.methods[mi]) << ","
       << (res.scenario.target == SimTarget::raw_proportions ? "raw" : "all_vs_one") << ","
       << (res.scenario.analysis_prior == AnalysisPrior::correct ? "correct" : "vague") << ","
       << res.scenario.n << "," << fmt_double(st.bcp()) << "," << fmt_double(st.se()) << ","
       << fmt_double(st.frac_outside()) << "," << st.runs << "," << st.failures << "\n";
  }
  return os.str();
}

}  // namespace mbeta
