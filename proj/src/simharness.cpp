#include "hettrim/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hettrim/errors.hpp"
#include "hettrim/estimator.hpp"
#include "hettrim/normal.hpp"
#include "hettrim/parallel.hpp"
#include "hettrim/rng.hpp"
#include "hettrim/simultaneous.hpp"
#include "hettrim/trimming.hpp"

namespace hettrim {

void validate(const DgpConfig& cfg) {
  if (cfg.n < 10) throw ValidationError("dgp: n must be at least 10");
  const auto [lo, hi] = cfg.prop_clip;
  if (!(0.0 < lo && lo < hi && hi < 1.0))
    throw ValidationError("dgp: clip bounds must satisfy 0 < lo < hi < 1");
  if (!std::isfinite(cfg.tau)) throw ValidationError("dgp: tau must be finite");
}

SimData generate_dgp(const DgpConfig& cfg) {
  validate(cfg);
  const Eigen::Index n = cfg.n;
  const std::uint64_t key = derive_seed(cfg.seed, {0xd6bULL});
  const auto [lo, hi] = cfg.prop_clip;

  SimData sim;
  sim.tau = cfg.tau;
  sim.data.covariates.resize(n, 2);
  sim.data.response.resize(n);
  sim.data.treatment.resize(n);
  sim.e_true.resize(n);
  sim.mu0_true.resize(n);
  sim.noise_var.resize(n);
  sim.noise.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto base = static_cast<std::uint64_t>(i) * 4;
    const double x1 = normal_quantile(CounterRng::uniform_at(key, base + 0));
    const double x2 = normal_quantile(CounterRng::uniform_at(key, base + 1));
    const double var = 1.0 + std::max(x2, 0.0);
    const double eps = std::sqrt(var) * normal_quantile(CounterRng::uniform_at(key, base + 2));
    const double e = std::clamp(dgp_propensity(x1, x2), lo, hi);
    const int z = CounterRng::uniform_at(key, base + 3) < e ? 1 : 0;
    const double y0 = 2.0 * x1 - x2 + eps;

    sim.data.covariates(i, 0) = x1;
    sim.data.covariates(i, 1) = x2;
    sim.data.treatment(i) = z;
    sim.data.response(i) = y0 + z * cfg.tau;
    sim.e_true(i) = e;
    sim.mu0_true(i) = 2.0 * x1 - x2;
    sim.noise_var(i) = var;
    sim.noise(i) = eps;
  }
  return sim;
}

NuisanceEstimates true_nuisances(const SimData& sim) {
  const Eigen::Index n = sim.data.size();
  NuisanceEstimates nuis;
  nuis.e_hat = sim.e_true;
  nuis.mu0_hat = sim.mu0_true;
  nuis.mu1_hat = sim.mu0_true.array() + sim.tau;
  nuis.var0_hat = sim.noise_var;
  nuis.var1_hat = sim.noise_var;
  nuis.fold_of = Eigen::VectorXi::Zero(n);
  nuis.clip = {sim.e_true.minCoeff(), sim.e_true.maxCoeff()};
  nuis.variance_floor = 1.0;
  nuis.e_raw_min = nuis.clip.first;
  nuis.e_raw_max = nuis.clip.second;
  nuis.fold_sizes = {static_cast<int>(n)};
  return nuis;
}

namespace {

std::string delta_label(double delta) {
  std::ostringstream os;
  os << "delta=" << delta;
  return os.str();
}

}  // namespace

CoverageReport coverage_study(const CoverageConfig& cfg) {
  if (cfg.trials < 1) throw ValidationError("coverage_study: trials must be at least 1");
  if (cfg.deltas.empty()) throw ValidationError("coverage_study: deltas must be nonempty");
  const std::size_t m = cfg.deltas.size();
  const auto trials = static_cast<std::size_t>(cfg.trials);

  std::vector<TrialRecord> records(trials);
  parallel_for(trials, cfg.threads, [&](std::size_t t) {
    const auto tt = static_cast<std::uint64_t>(t);
    DgpConfig dgp;
    dgp.n = cfg.n;
    dgp.tau = cfg.tau;
    dgp.prop_clip = cfg.dgp_clip;
    dgp.seed = derive_seed(cfg.seed, {tt, 1});
    const SimData sim = generate_dgp(dgp);

    RegressorSpec spec = cfg.spec;
    spec.seed = derive_seed(cfg.seed, {tt, 2});
    CrossFitOptions options;
    options.folds = cfg.cross_fit ? cfg.folds : 1;
    options.clip = cfg.estimate_clip;
    options.variance_floor = relative_variance_floor(sim.data.response, cfg.variance_floor_rel);
    const NuisanceEstimates nuis = cross_fit_nuisances(sim.data, spec, options);
    const Eigen::VectorXd k_hat = compute_khat(nuis, KhatMode::heteroscedastic);
    const Eigen::VectorXd scores = aipw_scores(sim.data, nuis);

    TrialRecord& rec = records[t];
    for (double delta : cfg.deltas) {
      const TrimResult trim = apply_trim(k_hat, gamma_fraction(k_hat, delta));
      const EffectEstimate est = estimate_effect(scores, trim, cfg.alpha);
      rec.tau_hat.push_back(est.tau_hat);
      rec.se.push_back(est.se);
      rec.n_retained.push_back(est.n_retained);
    }
    if (cfg.simultaneous) {
      SimulConfig scfg;
      scfg.deltas = cfg.deltas;
      scfg.alpha = cfg.alpha;
      scfg.B = cfg.B;
      scfg.seed = derive_seed(cfg.seed, {tt, 3});
      scfg.threads = 1;
      const SimulResult res = simultaneous_trim(scores, k_hat, scfg);
      rec.q = res.q;
      rec.simul_covered = std::all_of(res.rows.begin(), res.rows.end(), [&](const SimulRow& r) {
        return r.simul_lo <= cfg.tau && cfg.tau <= r.simul_hi;
      });
    }
  });

  CoverageReport report;
  const double z = normal_quantile(1.0 - cfg.alpha / 2.0);
  for (std::size_t j = 0; j < m; ++j) {
    CoverageRow row;
    row.n = cfg.n;
    row.target = delta_label(cfg.deltas[j]);
    row.delta = cfg.deltas[j];
    row.cross_fitted = cfg.cross_fit;
    row.trials = cfg.trials;
    double width = 0.0;
    for (const auto& rec : records) {
      const double half = z * rec.se[j];
      row.covered += (rec.tau_hat[j] - half <= cfg.tau && cfg.tau <= rec.tau_hat[j] + half);
      width += 2.0 * half;
    }
    row.coverage = static_cast<double>(row.covered) / row.trials;
    row.mean_width = width / row.trials;
    report.rows.push_back(row);
  }
  if (cfg.simultaneous) {
    CoverageRow row;
    row.n = cfg.n;
    row.target = "simultaneous";
    row.delta = std::numeric_limits<double>::quiet_NaN();
    row.cross_fitted = cfg.cross_fit;
    row.trials = cfg.trials;
    double width = 0.0;
    for (const auto& rec : records) {
      row.covered += rec.simul_covered;
      for (double se : rec.se) width += 2.0 * rec.q * se / static_cast<double>(m);
    }
    row.coverage = static_cast<double>(row.covered) / row.trials;
    row.mean_width = width / row.trials;
    report.rows.push_back(row);
  }
  report.trial_records = std::move(records);
  return report;
}

std::vector<TrimPathRow> trim_path(const Eigen::Ref<const Eigen::VectorXd>& scores,
                                   const Eigen::Ref<const Eigen::VectorXd>& k_hat,
                                   const std::vector<double>& delta_grid) {
  std::vector<TrimPathRow> rows;
  rows.reserve(delta_grid.size());
  for (double delta : delta_grid) {
    const TrimResult trim = apply_trim(k_hat, gamma_fraction(k_hat, delta));
    if (trim.n_retained < 2)
      throw ValidationError("trim_path: delta = " + std::to_string(delta) +
                            " leaves fewer than 2 units");
    const MeanSe m = masked_mean_se(scores, trim.retained);
    rows.push_back({delta, trim.gamma_hat, trim.n_retained, m.mean, m.se,
                    varmin_objective(k_hat, trim.gamma_hat)});
  }
  return rows;
}

std::vector<TrimPathRow> trim_path(const Dataset& data, const NuisanceEstimates& nuis,
                                   const Eigen::Ref<const Eigen::VectorXd>& k_hat,
                                   const std::vector<double>& delta_grid) {
  return trim_path(aipw_scores(data, nuis), k_hat, delta_grid);
}

}  // namespace hettrim
