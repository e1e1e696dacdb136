#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>

#include "hettrim/analysis.hpp"
#include "hettrim/errors.hpp"
#include "hettrim/estimator.hpp"
#include "hettrim/nuisance.hpp"
#include "hettrim/rng.hpp"

namespace hettrim {

namespace {

std::string strip(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(strip(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

// Runs fn, prefixing any error message with the pipeline stage.
template <typename Fn>
auto staged(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(stage) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string(stage) + ": " + e.what());
  }
}

}  // namespace

IngestedData ingest_csv(std::istream& in, const AnalysisConfig& cfg) {
  std::string line;
  if (!std::getline(in, line) || blank(line)) throw ValidationError("csv: missing header row");
  const auto header = split_row(line);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!index.emplace(header[c], c).second)
      throw ValidationError("csv: duplicate column '" + header[c] + "'");
  }
  auto column = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) throw ValidationError("csv: missing column '" + name + "'");
    return it->second;
  };
  const std::size_t y_col = column(cfg.response_column);
  const std::size_t z_col = column(cfg.treatment_column);

  IngestedData out;
  std::vector<std::size_t> x_cols;
  if (cfg.covariate_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == y_col || c == z_col) continue;
      x_cols.push_back(c);
      out.covariate_names.push_back(header[c]);
    }
  } else {
    for (const auto& name : cfg.covariate_columns) {
      x_cols.push_back(column(name));
      out.covariate_names.push_back(name);
    }
  }
  if (x_cols.empty()) throw ValidationError("csv: no covariate columns");

  std::vector<double> y;
  std::vector<int> z;
  std::vector<double> x;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    ++row;
    const auto cells = split_row(line);
    if (cells.size() != header.size())
      throw ValidationError("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                            " cells, header has " + std::to_string(header.size()));
    auto number = [&](std::size_t c) {
      const std::string& s = cells[c];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ValidationError("csv: non-numeric value '" + s + "' at row " + std::to_string(row) +
                              ", column " + header[c]);
      return v;
    };
    y.push_back(number(y_col));
    const double zv = number(z_col);
    if (zv != 0.0 && zv != 1.0)
      throw ValidationError("csv: treatment value '" + cells[z_col] + "' at row " +
                            std::to_string(row) + ", column " + header[z_col] + " is not 0 or 1");
    z.push_back(static_cast<int>(zv));
    for (auto c : x_cols) x.push_back(number(c));
  }
  if (row == 0) throw ValidationError("csv: no data rows");

  const auto n = static_cast<Eigen::Index>(row);
  const auto d = static_cast<Eigen::Index>(x_cols.size());
  out.data.response = Eigen::Map<Eigen::VectorXd>(y.data(), n);
  out.data.treatment = Eigen::Map<Eigen::VectorXi>(z.data(), n);
  out.data.covariates =
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(x.data(), n, d);
  if (out.data.n_treated() == 0) throw ValidationError("csv: empty treated arm (no rows with " + cfg.treatment_column + " = 1)");
  if (out.data.n_control() == 0) throw ValidationError("csv: empty control arm (no rows with " + cfg.treatment_column + " = 0)");
  return out;
}

IngestedData ingest_csv(const std::string& path, const AnalysisConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ValidationError("csv: cannot open '" + path + "'");
  return ingest_csv(in, cfg);
}

namespace {

struct Fitted {
  NuisanceEstimates nuis;
  Eigen::VectorXd scores;
};

Fitted fit_pipeline(const AnalysisConfig& cfg, const Dataset& data) {
  Fitted f;
  f.nuis = staged("nuisance", [&] {
    validate(data, cfg.folds);
    RegressorSpec spec = cfg.nuisance;
    spec.seed = cfg.seed;
    CrossFitOptions options;
    options.folds = cfg.folds;
    options.clip = cfg.prop_clip;
    options.variance_floor = relative_variance_floor(data.response, cfg.variance_floor_rel);
    return cross_fit_nuisances(data, spec, options);
  });
  f.scores = aipw_scores(data, f.nuis);
  return f;
}

}  // namespace

AnalysisReport run_analysis(const AnalysisConfig& cfg, const IngestedData& input) {
  staged("config", [&] { validate(cfg); return 0; });
  const Dataset& data = input.data;
  const Fitted fitted = fit_pipeline(cfg, data);

  AnalysisReport report;
  report.config = config_echo(cfg);
  report.n = data.size();
  report.d = data.dim();
  report.covariate_columns = input.covariate_names;
  report.diagnostics.e_raw_min = fitted.nuis.e_raw_min;
  report.diagnostics.e_raw_max = fitted.nuis.e_raw_max;
  report.diagnostics.variance_floor = fitted.nuis.variance_floor;
  report.diagnostics.n_floored_var0 = fitted.nuis.n_floored_var0;
  report.diagnostics.n_floored_var1 = fitted.nuis.n_floored_var1;
  report.diagnostics.fold_sizes = fitted.nuis.fold_sizes;

  for (const auto& spec : cfg.trims) {
    report.results.push_back(staged("trim", [&] {
      const TrimResult trim = hettrim::trim(fitted.nuis, spec);
      const EffectEstimate est = staged("estimate", [&] {
        return estimate_effect(fitted.scores, trim, cfg.alpha);
      });
      RuleResult r;
      r.mode = to_string(spec.mode);
      r.rule = rule_name(spec.rule);
      if (const auto* f = std::get_if<rule::Fraction>(&spec.rule)) r.delta = f->delta;
      r.gamma_hat = trim.gamma_hat;
      r.n_retained = trim.n_retained;
      r.tau_hat = est.tau_hat;
      r.se = est.se;
      r.ci_lo = est.ci_lo;
      r.ci_hi = est.ci_hi;
      return r;
    }));
  }

  if (cfg.simul) {
    report.simultaneous = staged("simultaneous", [&] {
      SimulConfig scfg = *cfg.simul;
      scfg.alpha = cfg.alpha;
      scfg.seed = derive_seed(cfg.seed, {0x5171ULL});
      scfg.threads = cfg.threads;
      const SimulResult res =
          simultaneous_trim(fitted.scores, compute_khat(fitted.nuis, cfg.simul_mode), scfg);
      SimulBlock block;
      block.mode = to_string(cfg.simul_mode);
      block.alpha = res.alpha;
      block.B = scfg.B;
      block.q = res.q;
      block.effective_b = res.effective_B;
      block.skipped_b = res.skipped_B;
      block.rows = res.rows;
      return block;
    });
  }
  return report;
}

AnalysisReport run_analysis(const AnalysisConfig& cfg) {
  const IngestedData input = staged("ingest", [&] { return ingest_csv(cfg.input_path, cfg); });
  return run_analysis(cfg, input);
}

std::vector<TrimPathRow> run_trim_path(const AnalysisConfig& cfg) {
  staged("config", [&] { validate(cfg); return 0; });
  const IngestedData input = staged("ingest", [&] { return ingest_csv(cfg.input_path, cfg); });
  const Fitted fitted = fit_pipeline(cfg, input.data);
  return staged("trim-path", [&] {
    return trim_path(fitted.scores, compute_khat(fitted.nuis, cfg.path_mode), cfg.path_deltas);
  });
}

}  // namespace hettrim
