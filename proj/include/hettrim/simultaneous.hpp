#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hettrim/dataset.hpp"
#include "hettrim/nuisance.hpp"

namespace hettrim {

struct SimulConfig {
  std::vector<double> deltas{0.0, 0.1, 0.2, 0.3};
  double alpha = 0.05;
  int B = 1000;
  std::uint64_t seed = 0;
  double min_effective_fraction = 0.95;
  /// Worker threads for the replicate loop; 0 = hardware concurrency. Results
  /// do not depend on this value.
  unsigned threads = 1;
};

/// Throws ValidationError unless deltas is nonempty, strictly increasing and
/// inside [0, 1), 0 < alpha < 1, B >= 100 and 0 <= min_effective_fraction <= 1.
void validate(const SimulConfig& cfg);

struct SimulRow {
  double delta = 0.0;
  double gamma_hat = 0.0;
  Eigen::Index n_retained = 0;
  double tau_hat = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;  // pointwise
  double ci_hi = 0.0;
  double simul_lo = 0.0;
  double simul_hi = 0.0;
};

struct SimulResult {
  std::vector<SimulRow> rows;
  double q = 0.0;
  double alpha = 0.05;
  int effective_B = 0;
  int skipped_B = 0;
};

/// Studentized deviation of one bootstrap replicate:
/// max_j |tau_j^b - tau_j| / se_j^b, where replicate set j keeps the units whose
/// k is at most the fraction-rule cut-off for deltas[j] recomputed on the
/// replicate. Returns nullopt when any replicate set has fewer than 2 units or
/// zero standard error.
std::optional<double> bootstrap_statistic(const std::vector<double>& orig_tau,
                                          const Eigen::Ref<const Eigen::VectorXd>& replicate_scores,
                                          const Eigen::Ref<const Eigen::VectorXd>& replicate_k,
                                          const std::vector<double>& deltas);

/// Simultaneous intervals over the fraction-rule trims in cfg.deltas via a
/// max-t bootstrap over units. Each replicate carries every resampled unit's
/// precomputed AIPW score and k value; nothing is refit. Replicate b draws from
/// its own stream derive_seed(cfg.seed, {b}). Throws NumericError("degenerate
/// bootstrap ...") when fewer than min_effective_fraction * B replicates are valid.
SimulResult simultaneous_trim(const Eigen::Ref<const Eigen::VectorXd>& scores,
                              const Eigen::Ref<const Eigen::VectorXd>& k_hat,
                              const SimulConfig& cfg);

/// Convenience overload computing the AIPW scores from data and nuisances.
SimulResult simultaneous_trim(const Dataset& data, const NuisanceEstimates& nuis,
                              const Eigen::Ref<const Eigen::VectorXd>& k_hat,
                              const SimulConfig& cfg);

}  // namespace hettrim
