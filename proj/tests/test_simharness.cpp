#include <cmath>
#include <random>

#include "doctest.h"
#include "hettrim/errors.hpp"
#include "hettrim/simharness.hpp"
#include "hettrim/trimming.hpp"

using namespace hettrim;

TEST_CASE("dgp structure holds unit by unit") {
  const SimData sim = generate_dgp({2000, 0.7, {0.05, 0.95}, 3});
  for (Eigen::Index i = 0; i < sim.data.size(); ++i) {
    const double x1 = sim.data.covariates(i, 0);
    const double x2 = sim.data.covariates(i, 1);
    const double e = std::min(0.95, std::max(0.05, 1.0 / (1.0 + 2.0 * std::exp(x2 - x1))));
    CHECK(sim.e_true(i) == doctest::Approx(e).epsilon(1e-14));
    CHECK(sim.noise_var(i) == 1.0 + std::max(x2, 0.0));
    const double y0 = 2.0 * x1 - x2 + sim.noise(i);
    CHECK(sim.data.response(i) == doctest::Approx(y0 + 0.7 * sim.data.treatment(i)).epsilon(1e-14));
  }
}

TEST_CASE("dgp draws are prefix stable and seeded") {
  const SimData a = generate_dgp({100, 1.0, {0.05, 0.95}, 4});
  const SimData b = generate_dgp({250, 1.0, {0.05, 0.95}, 4});
  CHECK(b.data.covariates.topRows(100) == a.data.covariates);
  CHECK(b.data.response.head(100) == a.data.response);
  const SimData c = generate_dgp({100, 1.0, {0.05, 0.95}, 5});
  CHECK(c.data.response != a.data.response);
}

TEST_CASE("dgp moments agree with an independent Monte Carlo of the design") {
  // Oracle: the same design simulated with std::mt19937_64 and std::normal_distribution.
  const Eigen::Index n = 100000;
  std::mt19937_64 gen(12345);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  double sum_z = 0.0, sum_y0 = 0.0, sum_eps2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = normal(gen);
    const double x2 = normal(gen);
    const double eps = std::sqrt(1.0 + std::max(x2, 0.0)) * normal(gen);
    const double e = std::min(0.95, std::max(0.05, dgp_propensity(x1, x2)));
    sum_z += unif(gen) < e;
    sum_y0 += 2.0 * x1 - x2 + eps;
    sum_eps2 += eps * eps;
  }
  const SimData sim = generate_dgp({n, 1.0, {0.05, 0.95}, 6});
  const double share = sim.data.treatment.cast<double>().mean();
  const Eigen::VectorXd y0 = sim.data.response - sim.data.treatment.cast<double>();
  // P(Z = 1) sd ~ 0.0016 per sample, Var(eps) mean ~ 1.4 with sd ~ 0.008.
  CHECK(std::abs(share - sum_z / n) < 0.01);
  CHECK(std::abs(y0.mean() - sum_y0 / n) < 0.06);
  CHECK(std::abs(sim.noise.squaredNorm() / n - sum_eps2 / n) < 0.05);
  CHECK(std::abs(sim.noise.squaredNorm() / n - (1.0 + 1.0 / std::sqrt(2.0 * M_PI))) < 0.03);
  CHECK(std::abs(sim.data.covariates.col(0).mean()) < 0.015);
  CHECK(std::abs(sim.data.covariates.col(1).squaredNorm() / n - 1.0) < 0.02);
}

TEST_CASE("dgp validation") {
  CHECK_THROWS_AS(generate_dgp({5, 1.0, {0.05, 0.95}, 0}), ValidationError);
  CHECK_THROWS_AS(generate_dgp({100, 1.0, {0.5, 0.4}, 0}), ValidationError);
  CHECK_THROWS_AS(generate_dgp({100, NAN, {0.05, 0.95}, 0}), ValidationError);
}

TEST_CASE("small coverage study is deterministic and well formed") {
  CoverageConfig cfg;
  cfg.trials = 6;
  cfg.n = 400;
  cfg.B = 100;
  cfg.seed = 8;
  cfg.threads = 1;
  const CoverageReport a = coverage_study(cfg);
  cfg.threads = 3;
  const CoverageReport b = coverage_study(cfg);
  REQUIRE(a.rows.size() == 4);
  CHECK(a.rows.back().target == "simultaneous");
  CHECK(std::isnan(a.rows.back().delta));
  CHECK(a.rows[1].target == "delta=0.05");
  for (std::size_t j = 0; j < a.rows.size(); ++j) {
    CHECK(a.rows[j].covered == b.rows[j].covered);
    CHECK(a.rows[j].mean_width == b.rows[j].mean_width);
    CHECK(a.rows[j].coverage >= 0.0);
    CHECK(a.rows[j].coverage <= 1.0);
  }
  for (std::size_t t = 0; t < a.trial_records.size(); ++t)
    CHECK(a.trial_records[t].tau_hat == b.trial_records[t].tau_hat);
}

TEST_CASE("trim path is monotone in retained count") {
  const SimData sim = generate_dgp({1000, 1.0, {0.05, 0.95}, 9});
  const NuisanceEstimates nuis = true_nuisances(sim);
  const Eigen::VectorXd k = compute_khat(nuis, KhatMode::heteroscedastic);
  const auto rows = trim_path(sim.data, nuis, k, {0.0, 0.1, 0.2, 0.5});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].n_retained == 1000);
  CHECK(rows[0].gamma_hat == k.maxCoeff());
  for (std::size_t j = 1; j < rows.size(); ++j) {
    CHECK(rows[j].n_retained <= rows[j - 1].n_retained);
    CHECK(rows[j].objective == doctest::Approx(varmin_objective(k, rows[j].gamma_hat)));
  }
  CHECK_THROWS_AS(trim_path(Eigen::VectorXd::Zero(3), Eigen::Vector3d(1, 2, 3), {0.9}),
                  ValidationError);
}
