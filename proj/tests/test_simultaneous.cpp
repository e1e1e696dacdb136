#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "hettrim/errors.hpp"
#include "hettrim/estimator.hpp"
#include "hettrim/rng.hpp"
#include "hettrim/simultaneous.hpp"

using namespace hettrim;

namespace {

struct Sample {
  Eigen::VectorXd scores;
  Eigen::VectorXd k;
};

Sample random_sample(Eigen::Index n, std::uint64_t seed, bool ties = false) {
  CounterRng rng(seed);
  Sample s{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    s.k(i) = ties ? 2.0 + static_cast<double>(rng.index(7)) : 2.0 + 30.0 * rng.uniform() * rng.uniform();
    s.scores(i) = 1.0 + std::sqrt(s.k(i)) * (rng.uniform() - 0.5);
  }
  return s;
}

// Replays the documented replicate procedure with the generic statistic:
// draw n indices from stream derive_seed(seed, {b}) and evaluate
// bootstrap_statistic on the resampled (score, k) pairs.
std::vector<double> reference_statistics(const Sample& s, const SimulConfig& cfg,
                                         const std::vector<double>& orig_tau) {
  const Eigen::Index n = s.scores.size();
  std::vector<double> stats;
  for (int b = 0; b < cfg.B; ++b) {
    CounterRng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(b)}));
    Eigen::VectorXd rs(n);
    Eigen::VectorXd rk(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto j = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
      rs(i) = s.scores(j);
      rk(i) = s.k(j);
    }
    if (auto t = bootstrap_statistic(orig_tau, rs, rk, cfg.deltas)) stats.push_back(*t);
  }
  std::sort(stats.begin(), stats.end());
  return stats;
}

}  // namespace

TEST_CASE("bootstrap_statistic reference value") {
  Eigen::VectorXd scores(4);
  scores << 1.0, 2.0, 3.0, 10.0;
  Eigen::VectorXd k(4);
  k << 1.0, 2.0, 3.0, 4.0;
  // delta 0 keeps all: mean 4, sd = sqrt(30/3) -> se = sqrt(10)/2
  // delta 0.25 keeps three: mean 2, se = 1/sqrt(3)
  const auto t = bootstrap_statistic({3.0, 2.5}, scores, k, {0.0, 0.25});
  REQUIRE(t.has_value());
  const double t0 = 1.0 / (std::sqrt(10.0) / 2.0);
  const double t1 = 0.5 / (1.0 / std::sqrt(3.0));
  CHECK(*t == doctest::Approx(std::max(t0, t1)).epsilon(1e-12));

  Eigen::VectorXd same = Eigen::VectorXd::Constant(4, 2.0);
  CHECK_FALSE(bootstrap_statistic({2.0}, same, k, {0.0}).has_value());
}

TEST_CASE("q matches the generic replicate procedure") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const Sample s = random_sample(60 + static_cast<Eigen::Index>(seed) * 7, seed, seed == 2);
    SimulConfig cfg;
    cfg.deltas = {0.0, 0.1, 0.25};
    cfg.B = 200;
    cfg.seed = 100 + seed;
    const SimulResult r = simultaneous_trim(s.scores, s.k, cfg);
    std::vector<double> orig;
    for (const auto& row : r.rows) orig.push_back(row.tau_hat);
    const std::vector<double> stats = reference_statistics(s, cfg, orig);
    REQUIRE(static_cast<int>(stats.size()) == r.effective_B);
    const auto m = static_cast<std::size_t>(
        std::ceil((1.0 - cfg.alpha) * static_cast<double>(stats.size() + 1)));
    const double q = stats[std::min(m, stats.size()) - 1];
    CHECK(r.q == doctest::Approx(q).epsilon(1e-9));
  }
}

TEST_CASE("simultaneous intervals contain the pointwise intervals") {
  const Sample s = random_sample(400, 4);
  SimulConfig cfg;
  cfg.seed = 9;
  const SimulResult r = simultaneous_trim(s.scores, s.k, cfg);
  REQUIRE(r.rows.size() == 4);
  CHECK(r.q >= 1.959963984540054 - 0.2);
  for (const auto& row : r.rows) {
    const TrimResult t = apply_trim(s.k, gamma_fraction(s.k, row.delta));
    CHECK(row.n_retained == t.n_retained);
    CHECK(row.tau_hat == doctest::Approx(trimmed_estimate(s.scores, t)).epsilon(1e-12));
    CHECK(row.simul_lo == doctest::Approx(row.tau_hat - r.q * row.se).epsilon(1e-12));
    if (r.q >= 1.959963984540054) {
      CHECK(row.simul_lo <= row.ci_lo);
      CHECK(row.simul_hi >= row.ci_hi);
    }
  }
  CHECK(r.effective_B + r.skipped_B == cfg.B);
}

TEST_CASE("results do not depend on the thread count") {
  const Sample s = random_sample(300, 5, true);
  SimulConfig cfg;
  cfg.seed = 21;
  cfg.B = 400;
  cfg.threads = 1;
  const SimulResult a = simultaneous_trim(s.scores, s.k, cfg);
  for (unsigned threads : {2u, 4u, 8u}) {
    cfg.threads = threads;
    const SimulResult b = simultaneous_trim(s.scores, s.k, cfg);
    CHECK(b.q == a.q);
    CHECK(b.effective_B == a.effective_B);
    for (std::size_t j = 0; j < a.rows.size(); ++j) CHECK(b.rows[j].simul_lo == a.rows[j].simul_lo);
  }
  cfg.seed = 22;
  CHECK(simultaneous_trim(s.scores, s.k, cfg).q != a.q);
}

TEST_CASE("degenerate bootstrap is reported") {
  Eigen::VectorXd scores = Eigen::VectorXd::Constant(10, 1.0);
  scores(0) = 2.0;
  const Eigen::VectorXd k = Eigen::VectorXd::LinSpaced(10, 1.0, 10.0);
  SimulConfig cfg;
  cfg.deltas = {0.0};
  cfg.B = 200;
  // a replicate without unit 0 has zero spread; that happens with probability 0.9^10
  CHECK_THROWS_WITH_AS(simultaneous_trim(scores, k, cfg), doctest::Contains("degenerate bootstrap"),
                       NumericError);
  cfg.min_effective_fraction = 0.0;
  const SimulResult r = simultaneous_trim(scores, k, cfg);
  CHECK(r.skipped_B > 0);
  CHECK(r.effective_B + r.skipped_B == 200);
}

TEST_CASE("config validation") {
  SimulConfig cfg;
  cfg.deltas = {0.1, 0.1};
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg.deltas = {};
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg.deltas = {0.0, 1.0};
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg.deltas = {0.0};
  cfg.B = 99;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg.B = 100;
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg.alpha = 0.1;
  CHECK_NOTHROW(validate(cfg));
}
