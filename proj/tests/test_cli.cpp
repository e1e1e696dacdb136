#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "hettrim/simharness.hpp"

#ifndef HETTRIM_CLI_PATH
#error "HETTRIM_CLI_PATH must name the CLI executable"
#endif

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(HETTRIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_inputs() {
  const hettrim::SimData sim = hettrim::generate_dgp({300, 1.0, {0.05, 0.95}, 5});
  std::ofstream csv("cli_data.csv");
  csv.precision(17);
  csv << "y,z,x1,x2\n";
  for (Eigen::Index i = 0; i < sim.data.size(); ++i)
    csv << sim.data.response(i) << ',' << sim.data.treatment(i) << ',' << sim.data.covariates(i, 0)
        << ',' << sim.data.covariates(i, 1) << '\n';
  std::ofstream cfg("cli_run.cfg");
  cfg << "schema_version = 1\ninput = cli_data.csv\nnuisance.knn_k = 10\nsimul.B = 100\n";
  std::ofstream bad("cli_bad.csv");
  bad << "y,z,x1\n1,1,0\n0,0,1\n1,2,1\n";
}

}  // namespace

TEST_CASE("CLI exit codes and outputs") {
  write_inputs();
  CHECK(run("analyze --config cli_run.cfg --output cli_a.json") == 0);
  CHECK(run("analyze --config cli_run.cfg --output cli_b.json") == 0);
  CHECK(slurp("cli_a.json") == slurp("cli_b.json"));
  CHECK(slurp("cli_a.json").find("\"results\"") != std::string::npos);

  CHECK(run("analyze --config cli_run.cfg --format csv --output cli_a.csv") == 0);
  CHECK(slurp("cli_a.csv").rfind("rule,mode,delta", 0) == 0);
  CHECK(run("simul --config cli_run.cfg --output cli_s.json --seed 3") == 0);
  CHECK(slurp("cli_s.json").find("\"q\"") != std::string::npos);
  CHECK(run("trim-path --config cli_run.cfg --format csv --output cli_p.csv") == 0);
  CHECK(run("simulate --config cli_run.cfg --set sim.trials=2 --set sim.n=200 --set sim.B=100 "
            "--format csv --output cli_c.csv") == 0);
  CHECK(slurp("cli_c.csv").find("simultaneous") != std::string::npos);

  CHECK(run("analyze --config cli_run.cfg --input cli_bad.csv --output cli_x.json") == 1);
  CHECK(run("analyze --config cli_missing.cfg") == 1);
  CHECK(run("analyze --config cli_run.cfg --set nosuch=1") == 1);
  CHECK(run("analyze --bogus-flag") == 1);
  CHECK(run("") == 1);
  CHECK(run("analyze --config cli_run.cfg --output /nonexistent/dir/out.json") == 2);
  // n = 300 cannot be split into 200 folds of at least two units.
  CHECK(run("analyze --config cli_run.cfg --set folds=200") == 1);
}
