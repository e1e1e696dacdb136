#pragma once

#include <utility>

#include <Eigen/Dense>

#include "hettrim/dataset.hpp"
#include "hettrim/nuisance.hpp"
#include "hettrim/trimming.hpp"

namespace hettrim {

struct EffectEstimate {
  double tau_hat = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  Eigen::Index n_retained = 0;
  double alpha = 0.05;
};

/// Doubly-robust (AIPW) pseudo-outcomes:
/// mu1 + Z (Y - mu1) / e - mu0 - (1 - Z)(Y - mu0) / (1 - e).
Eigen::VectorXd aipw_scores(const Dataset& data, const NuisanceEstimates& nuis);

/// Mean of the retained scores. Throws NumericError on an empty sub-population.
double trimmed_estimate(const Eigen::Ref<const Eigen::VectorXd>& scores, const TrimResult& trim);

/// Sample sd (divisor n_A - 1) of the retained scores over sqrt(n_A). Exactly 0
/// when all retained scores are identical. Throws NumericError if n_A < 2.
double standard_error(const Eigen::Ref<const Eigen::VectorXd>& scores, const TrimResult& trim);

/// tau_hat -/+ z_{1 - alpha/2} se.
std::pair<double, double> normal_ci(double tau_hat, double se, double alpha);

/// trimmed_estimate, standard_error and normal_ci in one record.
EffectEstimate estimate_effect(const Eigen::Ref<const Eigen::VectorXd>& scores,
                               const TrimResult& trim, double alpha);

/// Mean and standard error of the scores with mask[i] true.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  Eigen::Index count = 0;
};
MeanSe masked_mean_se(const Eigen::Ref<const Eigen::VectorXd>& scores,
                      const Eigen::Array<bool, Eigen::Dynamic, 1>& mask);

}  // namespace hettrim
