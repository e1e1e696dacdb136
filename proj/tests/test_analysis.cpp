#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "hettrim/analysis.hpp"
#include "hettrim/errors.hpp"
#include "hettrim/simharness.hpp"

using namespace hettrim;

namespace {

std::string dgp_csv(Eigen::Index n, std::uint64_t seed, bool permuted = false) {
  const SimData sim = generate_dgp({n, 1.0, {0.05, 0.95}, seed});
  std::ostringstream os;
  os.precision(17);
  os << (permuted ? "x2,z,y,x1\n" : "y,z,x1,x2\n");
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = sim.data.response(i);
    const int z = sim.data.treatment(i);
    const double x1 = sim.data.covariates(i, 0);
    const double x2 = sim.data.covariates(i, 1);
    if (permuted)
      os << x2 << ',' << z << ',' << y << ',' << x1 << '\n';
    else
      os << y << ',' << z << ',' << x1 << ',' << x2 << '\n';
  }
  return os.str();
}

AnalysisConfig base_config() {
  std::istringstream in(
      "# test run\n"
      "schema_version = 1\n"
      "nuisance.knn_k = 15   # neighbours\n"
      "folds = 3\n"
      "trim = heteroscedastic:varmin, homoscedastic:constant, heteroscedastic:fraction:0.1\n"
      "simul = true\n"
      "simul.B = 200\n"
      "seed = 42\n");
  return parse_config(in);
}

IngestedData ingest_text(const std::string& text, const AnalysisConfig& cfg) {
  std::istringstream in(text);
  return ingest_csv(in, cfg);
}

std::string error_of(const std::string& text) {
  try {
    ingest_text(text, base_config());
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing") {
  const AnalysisConfig cfg = base_config();
  CHECK(cfg.nuisance.knn_k == 15);
  CHECK(cfg.folds == 3);
  REQUIRE(cfg.trims.size() == 3);
  CHECK(std::holds_alternative<rule::VarMin>(cfg.trims[0].rule));
  CHECK(cfg.trims[1].mode == KhatMode::homoscedastic);
  CHECK(std::get<rule::Constant>(cfg.trims[1].rule).gamma == doctest::Approx(1.0 / 0.1 + 1.0 / 0.9));
  CHECK(std::get<rule::Fraction>(cfg.trims[2].rule).delta == 0.1);
  REQUIRE(cfg.simul.has_value());
  CHECK(cfg.simul->B == 200);
  CHECK(cfg.seed == 42);

  std::istringstream missing("folds = 2\n");
  CHECK_THROWS_WITH_AS(parse_config(missing), doctest::Contains("schema_version"), ValidationError);
  std::istringstream unknown("schema_version = 1\nfold = 2\n");
  CHECK_THROWS_WITH_AS(parse_config(unknown), doctest::Contains("line 2"), ValidationError);
  std::istringstream bad("schema_version = 1\nalpha = abc\n");
  CHECK_THROWS_AS(parse_config(bad), ValidationError);
  std::istringstream version("schema_version = 2\n");
  CHECK_THROWS_AS(parse_config(version), ValidationError);
  AnalysisConfig c = cfg;
  CHECK_THROWS_AS(set_config_value(c, "trim", "heteroscedastic:fraction:1.5"), ValidationError);
  CHECK_THROWS_AS(set_config_value(c, "trim", "sideways:varmin"), ValidationError);
}

TEST_CASE("config echo is canonical") {
  const auto echo = config_echo(base_config());
  CHECK(echo.at("trim") ==
        "heteroscedastic:varmin,homoscedastic:constant:11.111111111111111,heteroscedastic:fraction:0.10000000000000001");
  CHECK(echo.at("seed") == "42");
  CHECK(echo.at("simul.B") == "200");
  CHECK(echo.count("output") == 0);
}

TEST_CASE("csv ingest errors name the row and column") {
  const std::string header = "y,z,x1\n";
  CHECK(error_of(header + "1,1,0\n0,0,1\n1,0,a\n").find("non-numeric value 'a' at row 3, column x1") !=
        std::string::npos);
  CHECK(error_of(header + "1,1,0\n0,0,1\n1,1,1\n1,0,1\n1,2,1\n")
            .find("treatment value '2' at row 5, column z is not 0 or 1") != std::string::npos);
  CHECK(error_of(header).find("no data rows") != std::string::npos);
  CHECK(error_of("y,x1\n1,2\n").find("missing column 'z'") != std::string::npos);
  CHECK(error_of(header + "1,1,0\n0,1,1\n").find("empty control arm") != std::string::npos);
  CHECK(error_of(header + "1,1,0\n0,1\n").find("row 2") != std::string::npos);
  CHECK(error_of(header + "1,1,nan\n0,0,1\n").find("row 1") != std::string::npos);
}

TEST_CASE("selected covariate columns keep the configured order") {
  AnalysisConfig cfg = base_config();
  set_config_value(cfg, "covariate_columns", "x2,x1");
  const IngestedData in = ingest_text("x1,y,x2,z\n1,5,2,1\n3,6,4,0\n", cfg);
  CHECK(in.covariate_names == std::vector<std::string>{"x2", "x1"});
  CHECK(in.data.covariates(1, 0) == 4.0);
  CHECK(in.data.response(1) == 6.0);
}

TEST_CASE("analysis output is deterministic and round-trips through JSON") {
  const AnalysisConfig cfg = base_config();
  const IngestedData in = ingest_text(dgp_csv(600, 1), cfg);
  const AnalysisReport a = run_analysis(cfg, in);
  const AnalysisReport b = run_analysis(cfg, in);
  CHECK(report_to_json(a) == report_to_json(b));
  CHECK(report_to_csv(a) == report_to_csv(b));
  CHECK(report_from_json(report_to_json(a)) == a);
  REQUIRE(a.results.size() == 3);
  REQUIRE(a.simultaneous.has_value());
  CHECK(a.simultaneous->rows.size() == 4);
  CHECK(a.n == 600);
  CHECK(a.diagnostics.fold_sizes.size() == 3);
  for (const auto& r : a.results) {
    CHECK(r.ci_lo < r.tau_hat);
    CHECK(r.tau_hat < r.ci_hi);
    CHECK(std::abs(r.tau_hat - 1.0) < 1.0);
  }
  const std::string csv = report_to_csv(a);
  CHECK(csv.rfind("rule,mode,delta,gamma_hat,n_retained,tau_hat,se,ci_lo,ci_hi,simul_lo,simul_hi\n", 0) == 0);

  AnalysisConfig other = cfg;
  other.seed = 43;
  CHECK(report_to_json(run_analysis(other, in)) != report_to_json(a));

  AnalysisConfig threaded = cfg;
  threaded.threads = 4;
  CHECK(report_to_json(run_analysis(threaded, in)) == report_to_json(a));
}

TEST_CASE("analysis does not depend on CSV column order") {
  AnalysisConfig cfg = base_config();
  set_config_value(cfg, "covariate_columns", "x1,x2");
  const AnalysisReport a = run_analysis(cfg, ingest_text(dgp_csv(300, 2), cfg));
  const AnalysisReport b = run_analysis(cfg, ingest_text(dgp_csv(300, 2, true), cfg));
  CHECK(report_to_json(a) == report_to_json(b));
}

TEST_CASE("analysis errors carry the stage") {
  AnalysisConfig cfg = base_config();
  set_config_value(cfg, "folds", "400");
  try {
    run_analysis(cfg, ingest_text(dgp_csv(300, 3), cfg));
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).rfind("nuisance: ", 0) == 0);
  }
  cfg = base_config();
  cfg.input_path = "/nonexistent/data.csv";
  CHECK_THROWS_WITH_AS(run_analysis(cfg), doctest::Contains("ingest: "), ValidationError);
}

TEST_CASE("trim path and coverage serializations") {
  AnalysisConfig cfg = base_config();
  const IngestedData in = ingest_text(dgp_csv(400, 4), cfg);
  const std::string path = "hettrim_test_path_input.csv";
  {
    std::ofstream out(path);
    out << dgp_csv(400, 4);
  }
  cfg.input_path = path;
  const auto rows = run_trim_path(cfg);
  std::remove(path.c_str());
  CHECK(rows.size() == cfg.path_deltas.size());
  CHECK(trim_path_to_csv(rows).rfind("delta,", 0) == 0);
  CHECK(trim_path_to_json(rows).find("\"objective\"") != std::string::npos);

  CoverageConfig study;
  study.trials = 2;
  study.n = 300;
  study.B = 100;
  study.threads = 1;
  const CoverageReport rep = coverage_study(study);
  CHECK(coverage_to_csv(rep).find("simultaneous") != std::string::npos);
  CHECK(coverage_to_json(rep).find("\"coverage\"") != std::string::npos);
}
