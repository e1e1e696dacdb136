#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hettrim/dataset.hpp"
#include "hettrim/nuisance.hpp"
#include "hettrim/regressor.hpp"

namespace hettrim {

/// Simulation design with a known constant effect:
///   X1, X2 ~ N(0, 1), eps ~ N(0, 1 + max(X2, 0)),
///   Y(0) = 2 X1 - X2 + eps, Y(1) = Y(0) + tau,
///   e(X) = 1 / (1 + 2 exp(X2 - X1)) clipped to prop_clip, Z ~ Bernoulli(e(X)).
struct DgpConfig {
  Eigen::Index n = 1000;
  double tau = 1.0;
  std::pair<double, double> prop_clip{0.05, 0.95};
  std::uint64_t seed = 0;
};

void validate(const DgpConfig& cfg);

struct SimData {
  Dataset data;
  Eigen::VectorXd e_true;    // after clipping
  Eigen::VectorXd mu0_true;  // 2 X1 - X2
  Eigen::VectorXd noise_var; // 1 + max(X2, 0)
  Eigen::VectorXd noise;     // realized eps
  double tau = 1.0;
};

/// Unclipped propensity of the design.
inline double dgp_propensity(double x1, double x2) { return 1.0 / (1.0 + 2.0 * std::exp(x2 - x1)); }

/// Unit i uses counter-based draws keyed by (seed, i) only, so the data do not
/// depend on n beyond truncation or on thread count.
SimData generate_dgp(const DgpConfig& cfg);

/// The design's true nuisance functions packaged as NuisanceEstimates.
NuisanceEstimates true_nuisances(const SimData& sim);

/// Nuisance learner used by coverage studies unless overridden: local-linear
/// knn on 40 neighbours.
inline RegressorSpec coverage_regressor_spec() {
  RegressorSpec spec;
  spec.method = RegressorMethod::knn;
  spec.knn_k = 40;
  spec.local_linear = true;
  return spec;
}

struct CoverageConfig {
  int trials = 500;
  Eigen::Index n = 4000;
  std::vector<double> deltas{0.0, 0.05, 0.1};
  bool cross_fit = true;
  int folds = 5;  // used when cross_fit
  RegressorSpec spec = coverage_regressor_spec();
  std::uint64_t seed = 0;
  double tau = 1.0;
  std::pair<double, double> dgp_clip{0.05, 0.95};
  /// Clip for estimated propensities, matching the design's own bounds.
  std::pair<double, double> estimate_clip{0.05, 0.95};
  double variance_floor_rel = 1e-6;
  double alpha = 0.05;
  bool simultaneous = true;
  int B = 1000;
  unsigned threads = 0;
};

struct CoverageRow {
  Eigen::Index n = 0;
  std::string target;  // "delta=<d>" or "simultaneous"
  double delta = 0.0;  // NaN for the simultaneous row
  bool cross_fitted = false;
  int covered = 0;
  int trials = 0;
  double coverage = 0.0;
  double mean_width = 0.0;
};

struct TrialRecord {
  std::vector<double> tau_hat;  // per delta
  std::vector<double> se;
  std::vector<Eigen::Index> n_retained;
  double q = 0.0;
  bool simul_covered = false;
};

struct CoverageReport {
  std::vector<CoverageRow> rows;
  std::vector<TrialRecord> trial_records;
};

/// Per trial: generate data, fit nuisances (K = folds when cross_fit, else 1),
/// heteroscedastic k, fraction-rule trims, marginal normal intervals and the
/// simultaneous intervals. An interval covers when it contains tau. Any failed
/// trial aborts the study.
CoverageReport coverage_study(const CoverageConfig& cfg);

struct TrimPathRow {
  double delta = 0.0;
  double gamma_hat = 0.0;
  Eigen::Index n_retained = 0;
  double tau_hat = 0.0;
  double se = 0.0;
  /// Sample efficient-variance objective at gamma_hat.
  double objective = 0.0;
};

/// One row per delta of the fraction-rule trim of k_hat.
std::vector<TrimPathRow> trim_path(const Eigen::Ref<const Eigen::VectorXd>& scores,
                                   const Eigen::Ref<const Eigen::VectorXd>& k_hat,
                                   const std::vector<double>& delta_grid);

std::vector<TrimPathRow> trim_path(const Dataset& data, const NuisanceEstimates& nuis,
                                   const Eigen::Ref<const Eigen::VectorXd>& k_hat,
                                   const std::vector<double>& delta_grid);

}  // namespace hettrim
