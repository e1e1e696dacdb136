#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hettrim/analysis.hpp"
#include "hettrim/errors.hpp"
#include "json.hpp"

namespace hettrim {

using nlohmann::json;

bool operator==(const SimulRow& a, const SimulRow& b) {
  return a.delta == b.delta && a.gamma_hat == b.gamma_hat && a.n_retained == b.n_retained &&
         a.tau_hat == b.tau_hat && a.se == b.se && a.ci_lo == b.ci_lo && a.ci_hi == b.ci_hi &&
         a.simul_lo == b.simul_lo && a.simul_hi == b.simul_hi;
}

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw ValidationError("unknown report format '" + name + "'");
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_json(const SimulRow& r) {
  return {{"delta", r.delta},       {"gamma_hat", r.gamma_hat}, {"n_retained", r.n_retained},
          {"tau_hat", r.tau_hat},   {"se", r.se},               {"ci_lo", r.ci_lo},
          {"ci_hi", r.ci_hi},       {"simul_lo", r.simul_lo},   {"simul_hi", r.simul_hi}};
}

SimulRow simul_row_from(const json& j) {
  SimulRow r;
  r.delta = j.at("delta").get<double>();
  r.gamma_hat = j.at("gamma_hat").get<double>();
  r.n_retained = j.at("n_retained").get<Eigen::Index>();
  r.tau_hat = j.at("tau_hat").get<double>();
  r.se = j.at("se").get<double>();
  r.ci_lo = j.at("ci_lo").get<double>();
  r.ci_hi = j.at("ci_hi").get<double>();
  r.simul_lo = j.at("simul_lo").get<double>();
  r.simul_hi = j.at("simul_hi").get<double>();
  return r;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string report_to_json(const AnalysisReport& report) {
  json j;
  j["config"] = report.config;
  j["n"] = report.n;
  j["d"] = report.d;
  j["covariate_columns"] = report.covariate_columns;
  json results = json::array();
  for (const auto& r : report.results) {
    results.push_back({{"mode", r.mode},       {"rule", r.rule},
                       {"delta", optional_number(r.delta)},
                       {"gamma_hat", r.gamma_hat}, {"n_retained", r.n_retained},
                       {"tau_hat", r.tau_hat}, {"se", r.se},
                       {"ci_lo", r.ci_lo},     {"ci_hi", r.ci_hi}});
  }
  j["results"] = results;
  if (report.simultaneous) {
    const auto& s = *report.simultaneous;
    json rows = json::array();
    for (const auto& r : s.rows) rows.push_back(to_json(r));
    j["simultaneous"] = {{"mode", s.mode},           {"alpha", s.alpha},
                         {"b", s.B},                 {"q", s.q},
                         {"effective_b", s.effective_b}, {"skipped_b", s.skipped_b},
                         {"rows", rows}};
  } else {
    j["simultaneous"] = nullptr;
  }
  const auto& d = report.diagnostics;
  j["diagnostics"] = {{"e_raw_min", d.e_raw_min},
                      {"e_raw_max", d.e_raw_max},
                      {"variance_floor", d.variance_floor},
                      {"n_floored_var0", d.n_floored_var0},
                      {"n_floored_var1", d.n_floored_var1},
                      {"fold_sizes", d.fold_sizes}};
  return j.dump(2) + "\n";
}

AnalysisReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report: invalid JSON: ") + e.what());
  }
  try {
    AnalysisReport report;
    report.config = j.at("config").get<std::map<std::string, std::string>>();
    report.n = j.at("n").get<Eigen::Index>();
    report.d = j.at("d").get<Eigen::Index>();
    report.covariate_columns = j.at("covariate_columns").get<std::vector<std::string>>();
    for (const auto& r : j.at("results")) {
      RuleResult rr;
      rr.mode = r.at("mode").get<std::string>();
      rr.rule = r.at("rule").get<std::string>();
      if (!r.at("delta").is_null()) rr.delta = r.at("delta").get<double>();
      rr.gamma_hat = r.at("gamma_hat").get<double>();
      rr.n_retained = r.at("n_retained").get<Eigen::Index>();
      rr.tau_hat = r.at("tau_hat").get<double>();
      rr.se = r.at("se").get<double>();
      rr.ci_lo = r.at("ci_lo").get<double>();
      rr.ci_hi = r.at("ci_hi").get<double>();
      report.results.push_back(rr);
    }
    if (const auto& s = j.at("simultaneous"); !s.is_null()) {
      SimulBlock block;
      block.mode = s.at("mode").get<std::string>();
      block.alpha = s.at("alpha").get<double>();
      block.B = s.at("b").get<int>();
      block.q = s.at("q").get<double>();
      block.effective_b = s.at("effective_b").get<int>();
      block.skipped_b = s.at("skipped_b").get<int>();
      for (const auto& r : s.at("rows")) block.rows.push_back(simul_row_from(r));
      report.simultaneous = block;
    }
    const auto& d = j.at("diagnostics");
    report.diagnostics.e_raw_min = d.at("e_raw_min").get<double>();
    report.diagnostics.e_raw_max = d.at("e_raw_max").get<double>();
    report.diagnostics.variance_floor = d.at("variance_floor").get<double>();
    report.diagnostics.n_floored_var0 = d.at("n_floored_var0").get<int>();
    report.diagnostics.n_floored_var1 = d.at("n_floored_var1").get<int>();
    report.diagnostics.fold_sizes = d.at("fold_sizes").get<std::vector<int>>();
    return report;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report: ") + e.what());
  }
}

std::string report_to_csv(const AnalysisReport& report) {
  std::ostringstream os;
  os << "rule,mode,delta,gamma_hat,n_retained,tau_hat,se,ci_lo,ci_hi,simul_lo,simul_hi\n";
  for (const auto& r : report.results) {
    os << r.rule << ',' << r.mode << ',' << (r.delta ? num(*r.delta) : "") << ',' << num(r.gamma_hat)
       << ',' << r.n_retained << ',' << num(r.tau_hat) << ',' << num(r.se) << ',' << num(r.ci_lo)
       << ',' << num(r.ci_hi) << ",,\n";
  }
  if (report.simultaneous) {
    for (const auto& r : report.simultaneous->rows) {
      os << "simultaneous," << report.simultaneous->mode << ',' << num(r.delta) << ','
         << num(r.gamma_hat) << ',' << r.n_retained << ',' << num(r.tau_hat) << ',' << num(r.se)
         << ',' << num(r.ci_lo) << ',' << num(r.ci_hi) << ',' << num(r.simul_lo) << ','
         << num(r.simul_hi) << '\n';
    }
  }
  return os.str();
}

std::string trim_path_to_csv(const std::vector<TrimPathRow>& rows) {
  std::ostringstream os;
  os << "delta,gamma_hat,n_retained,tau_hat,se,objective\n";
  for (const auto& r : rows)
    os << num(r.delta) << ',' << num(r.gamma_hat) << ',' << r.n_retained << ',' << num(r.tau_hat)
       << ',' << num(r.se) << ',' << num(r.objective) << '\n';
  return os.str();
}

std::string trim_path_to_json(const std::vector<TrimPathRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"delta", r.delta}, {"gamma_hat", r.gamma_hat}, {"n_retained", r.n_retained},
                   {"tau_hat", r.tau_hat}, {"se", r.se}, {"objective", r.objective}});
  return json{{"trim_path", arr}}.dump(2) + "\n";
}

std::string coverage_to_csv(const CoverageReport& report) {
  std::ostringstream os;
  os << "n,target,cross_fitted,covered,trials,coverage,mean_width\n";
  for (const auto& r : report.rows)
    os << r.n << ',' << r.target << ',' << (r.cross_fitted ? "true" : "false") << ',' << r.covered
       << ',' << r.trials << ',' << num(r.coverage) << ',' << num(r.mean_width) << '\n';
  return os.str();
}

std::string coverage_to_json(const CoverageReport& report) {
  json arr = json::array();
  for (const auto& r : report.rows)
    arr.push_back({{"n", r.n},
                   {"target", r.target},
                   {"delta", std::isnan(r.delta) ? json(nullptr) : json(r.delta)},
                   {"cross_fitted", r.cross_fitted},
                   {"covered", r.covered},
                   {"trials", r.trials},
                   {"coverage", r.coverage},
                   {"mean_width", r.mean_width}});
  return json{{"coverage", arr}}.dump(2) + "\n";
}

void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void emit_report(const AnalysisReport& report, ReportFormat format, const std::string& path) {
  write_text(format == ReportFormat::json ? report_to_json(report) : report_to_csv(report), path);
}

}  // namespace hettrim
