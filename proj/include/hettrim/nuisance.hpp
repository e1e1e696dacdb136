#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hettrim/dataset.hpp"
#include "hettrim/regressor.hpp"

namespace hettrim {

/// Per-unit nuisance predictions. When cross-fitted (K >= 2) every entry for
/// unit i comes from models that never saw unit i.
struct NuisanceEstimates {
  Eigen::VectorXd e_hat;
  Eigen::VectorXd mu0_hat;
  Eigen::VectorXd mu1_hat;
  Eigen::VectorXd var0_hat;
  Eigen::VectorXd var1_hat;
  Eigen::VectorXi fold_of;
  std::pair<double, double> clip{0.01, 0.99};
  double variance_floor = 0.0;

  // Diagnostics.
  double e_raw_min = 0.0;
  double e_raw_max = 0.0;
  int n_floored_var0 = 0;
  int n_floored_var1 = 0;
  std::vector<int> fold_sizes;

  Eigen::Index size() const { return e_hat.size(); }
};

struct CrossFitOptions {
  int folds = 5;
  std::pair<double, double> clip{0.01, 0.99};
  double variance_floor = 1e-6;
  /// Overrides the built-in learners selected by RegressorSpec::method.
  RegressorFactory factory;
};

/// max(floor, m2 - m1^2).
inline double conditional_variance_from_moments(double m2, double m1, double floor) {
  const double v = m2 - m1 * m1;
  return v > floor ? v : floor;
}

/// Seeded shuffle of [0, n) cut into K contiguous near-equal blocks.
Eigen::VectorXi assign_folds(Eigen::Index n, int folds, std::uint64_t seed);

/// Fits e(x) on all units and mu_w(x), E[Y^2 | X, Z=w] within each arm, then
/// forms var_w = max(floor, m2_w - mu_w^2). K = 1 fits on the full sample and
/// predicts in-sample; K >= 2 predicts each fold from models trained on its
/// complement. The fold shuffle is seeded by spec.seed. With a local-linear
/// knn spec the variance moments m1, m2 come from plain neighbour averages,
/// which keeps m2 - m1^2 a neighbour variance; e and mu stay local-linear.
NuisanceEstimates cross_fit_nuisances(const Dataset& data, const RegressorSpec& spec,
                                      const CrossFitOptions& options);

}  // namespace hettrim

namespace hettrim {

/// rel * (sample variance of y), the default scale for the variance floor.
/// Falls back to rel when y is constant.
double relative_variance_floor(const Eigen::Ref<const Eigen::VectorXd>& y, double rel);

}  // namespace hettrim
