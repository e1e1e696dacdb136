#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include "hettrim/analysis.hpp"
#include "hettrim/errors.hpp"

namespace hettrim {

namespace {

std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, sep)) {
    item = trim_ws(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ValidationError("config: invalid value '" + value + "' for key '" + key + "'");
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const char* first = value.data();
  const char* last = first + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) bad_value(key, value);
  return v;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& value) {
  Int v = 0;
  const char* first = value.data();
  const char* last = first + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) bad_value(key, value);
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(to_double(key, item));
  if (out.empty()) bad_value(key, value);
  return out;
}

std::pair<double, double> to_pair(const std::string& key, const std::string& value) {
  const auto v = to_doubles(key, value);
  if (v.size() != 2) bad_value(key, value);
  return {v[0], v[1]};
}

TrimSpec to_trim_spec(const std::string& key, const std::string& item) {
  const auto parts = split_list(item, ':');
  if (parts.size() < 2 || parts.size() > 3) bad_value(key, item);
  TrimSpec spec;
  spec.mode = khat_mode_from_string(parts[0]);
  if (parts[1] == "varmin" && parts.size() == 2) {
    spec.rule = rule::VarMin{};
  } else if (parts[1] == "constant") {
    spec.rule = rule::Constant{parts.size() == 3 ? to_double(key, parts[2]) : rule::Constant{}.gamma};
  } else if (parts[1] == "fraction" && parts.size() == 3) {
    spec.rule = rule::Fraction{to_double(key, parts[2])};
  } else {
    bad_value(key, item);
  }
  validate(spec);
  return spec;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::string join(const std::vector<double>& items) {
  std::vector<std::string> s;
  for (double v : items) s.push_back(fmt(v));
  return join(s);
}

std::string trim_spec_text(const TrimSpec& spec) {
  std::string out = to_string(spec.mode) + ":" + rule_name(spec.rule);
  if (const auto* c = std::get_if<rule::Constant>(&spec.rule)) out += ":" + fmt(c->gamma);
  if (const auto* f = std::get_if<rule::Fraction>(&spec.rule)) out += ":" + fmt(f->delta);
  return out;
}

SimulConfig& simul(AnalysisConfig& cfg) {
  if (!cfg.simul) cfg.simul.emplace();
  return *cfg.simul;
}

}  // namespace

void set_config_value(AnalysisConfig& cfg, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim_ws(key_in);
  const std::string value = trim_ws(value_in);
  if (key == "schema_version") {
    if (to_int<int>(key, value) != kConfigSchemaVersion)
      throw ValidationError("config: unsupported schema_version " + value);
  } else if (key == "input") {
    cfg.input_path = value;
  } else if (key == "response_column") {
    cfg.response_column = value;
  } else if (key == "treatment_column") {
    cfg.treatment_column = value;
  } else if (key == "covariate_columns") {
    cfg.covariate_columns = value == "all" ? std::vector<std::string>{} : split_list(value);
  } else if (key == "nuisance.method") {
    cfg.nuisance.method = regressor_method_from_string(value);
  } else if (key == "nuisance.knn_k") {
    cfg.nuisance.knn_k = to_int<int>(key, value);
  } else if (key == "nuisance.standardize") {
    cfg.nuisance.standardize = to_bool(key, value);
  } else if (key == "nuisance.local_linear") {
    cfg.nuisance.local_linear = to_bool(key, value);
  } else if (key == "nuisance.trees") {
    cfg.nuisance.trees = to_int<int>(key, value);
  } else if (key == "nuisance.max_depth") {
    cfg.nuisance.max_depth = to_int<int>(key, value);
  } else if (key == "nuisance.min_leaf") {
    cfg.nuisance.min_leaf = to_int<int>(key, value);
  } else if (key == "nuisance.mtry") {
    cfg.nuisance.mtry = to_int<int>(key, value);
  } else if (key == "folds") {
    cfg.folds = to_int<int>(key, value);
  } else if (key == "prop_clip") {
    cfg.prop_clip = to_pair(key, value);
  } else if (key == "variance_floor_rel") {
    cfg.variance_floor_rel = to_double(key, value);
  } else if (key == "trim") {
    cfg.trims.clear();
    for (const auto& item : split_list(value)) cfg.trims.push_back(to_trim_spec(key, item));
  } else if (key == "simul") {
    if (to_bool(key, value))
      simul(cfg);
    else
      cfg.simul.reset();
  } else if (key == "simul.deltas") {
    simul(cfg).deltas = to_doubles(key, value);
  } else if (key == "simul.B") {
    simul(cfg).B = to_int<int>(key, value);
  } else if (key == "simul.min_effective_fraction") {
    simul(cfg).min_effective_fraction = to_double(key, value);
  } else if (key == "simul.mode") {
    simul(cfg);
    cfg.simul_mode = khat_mode_from_string(value);
  } else if (key == "alpha") {
    cfg.alpha = to_double(key, value);
  } else if (key == "seed") {
    cfg.seed = to_int<std::uint64_t>(key, value);
  } else if (key == "threads") {
    cfg.threads = to_int<unsigned>(key, value);
  } else if (key == "output") {
    cfg.output_path = value;
  } else if (key == "format") {
    report_format_from_string(value);
    cfg.format = value;
  } else if (key == "path.deltas") {
    cfg.path_deltas = to_doubles(key, value);
  } else if (key == "path.mode") {
    cfg.path_mode = khat_mode_from_string(value);
  } else if (key == "sim.trials") {
    cfg.sim.trials = to_int<int>(key, value);
  } else if (key == "sim.n") {
    cfg.sim.n = to_int<Eigen::Index>(key, value);
  } else if (key == "sim.deltas") {
    cfg.sim.deltas = to_doubles(key, value);
  } else if (key == "sim.cross_fit") {
    cfg.sim.cross_fit = to_bool(key, value);
  } else if (key == "sim.folds") {
    cfg.sim.folds = to_int<int>(key, value);
  } else if (key == "sim.B") {
    cfg.sim.B = to_int<int>(key, value);
  } else if (key == "sim.tau") {
    cfg.sim.tau = to_double(key, value);
  } else if (key == "sim.dgp_clip") {
    cfg.sim.dgp_clip = to_pair(key, value);
  } else if (key == "sim.simultaneous") {
    cfg.sim.simultaneous = to_bool(key, value);
  } else {
    throw ValidationError("config: unknown key '" + key + "'");
  }
}

AnalysisConfig parse_config(std::istream& in) {
  AnalysisConfig cfg;
  bool have_version = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim_ws(line.substr(0, line.find('#')));  // '#' starts a comment
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim_ws(body.substr(0, eq));
    if (key == "schema_version") have_version = true;
    try {
      set_config_value(cfg, key, body.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_version) throw ValidationError("config: missing schema_version");
  return cfg;
}

AnalysisConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  return parse_config(in);
}

CoverageConfig coverage_config(const AnalysisConfig& cfg) {
  CoverageConfig out = cfg.sim;
  out.spec = cfg.nuisance;
  out.seed = cfg.seed;
  out.alpha = cfg.alpha;
  out.estimate_clip = cfg.prop_clip;
  out.variance_floor_rel = cfg.variance_floor_rel;
  out.threads = cfg.threads;
  return out;
}

std::map<std::string, std::string> config_echo(const AnalysisConfig& cfg) {
  std::map<std::string, std::string> m;
  m["schema_version"] = std::to_string(kConfigSchemaVersion);
  m["input"] = cfg.input_path;
  m["response_column"] = cfg.response_column;
  m["treatment_column"] = cfg.treatment_column;
  m["covariate_columns"] = cfg.covariate_columns.empty() ? "all" : join(cfg.covariate_columns);
  m["nuisance.method"] = to_string(cfg.nuisance.method);
  m["nuisance.knn_k"] = std::to_string(cfg.nuisance.knn_k);
  m["nuisance.standardize"] = cfg.nuisance.standardize ? "true" : "false";
  m["nuisance.local_linear"] = cfg.nuisance.local_linear ? "true" : "false";
  m["nuisance.trees"] = std::to_string(cfg.nuisance.trees);
  m["nuisance.max_depth"] = std::to_string(cfg.nuisance.max_depth);
  m["nuisance.min_leaf"] = std::to_string(cfg.nuisance.min_leaf);
  m["nuisance.mtry"] = std::to_string(cfg.nuisance.mtry);
  m["folds"] = std::to_string(cfg.folds);
  m["prop_clip"] = fmt(cfg.prop_clip.first) + "," + fmt(cfg.prop_clip.second);
  m["variance_floor_rel"] = fmt(cfg.variance_floor_rel);
  std::vector<std::string> trims;
  for (const auto& t : cfg.trims) trims.push_back(trim_spec_text(t));
  m["trim"] = join(trims);
  m["simul"] = cfg.simul ? "true" : "false";
  if (cfg.simul) {
    m["simul.deltas"] = join(cfg.simul->deltas);
    m["simul.B"] = std::to_string(cfg.simul->B);
    m["simul.min_effective_fraction"] = fmt(cfg.simul->min_effective_fraction);
    m["simul.mode"] = to_string(cfg.simul_mode);
  }
  m["alpha"] = fmt(cfg.alpha);
  m["seed"] = std::to_string(cfg.seed);
  return m;
}

void validate(const AnalysisConfig& cfg) {
  if (cfg.response_column == cfg.treatment_column)
    throw ValidationError("config: response and treatment columns must differ");
  for (const auto& c : cfg.covariate_columns) {
    if (c == cfg.response_column || c == cfg.treatment_column)
      throw ValidationError("config: covariate column '" + c + "' overlaps response/treatment");
  }
  for (std::size_t i = 0; i < cfg.covariate_columns.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.covariate_columns.size(); ++j)
      if (cfg.covariate_columns[i] == cfg.covariate_columns[j])
        throw ValidationError("config: duplicate covariate column '" + cfg.covariate_columns[i] + "'");
  if (cfg.folds < 1) throw ValidationError("config: folds must be >= 1");
  const auto [lo, hi] = cfg.prop_clip;
  if (!(0.0 < lo && lo < hi && hi < 1.0))
    throw ValidationError("config: prop_clip must satisfy 0 < lo < hi < 1");
  if (!(cfg.variance_floor_rel > 0.0)) throw ValidationError("config: variance_floor_rel must be positive");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("config: alpha must lie in (0, 1)");
  for (const auto& t : cfg.trims) validate(t);
  if (cfg.simul) {
    SimulConfig s = *cfg.simul;
    s.alpha = cfg.alpha;
    validate(s);
  }
}

}  // namespace hettrim
