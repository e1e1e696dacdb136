#include "hettrim/simultaneous.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hettrim/errors.hpp"
#include "hettrim/estimator.hpp"
#include "hettrim/normal.hpp"
#include "hettrim/parallel.hpp"
#include "hettrim/rng.hpp"
#include "hettrim/trimming.hpp"

namespace hettrim {

void validate(const SimulConfig& cfg) {
  if (cfg.deltas.empty()) throw ValidationError("simultaneous: deltas must be nonempty");
  for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
    const double d = cfg.deltas[j];
    if (!(d >= 0.0 && d < 1.0)) throw ValidationError("simultaneous: each delta must lie in [0, 1)");
    if (j > 0 && !(d > cfg.deltas[j - 1]))
      throw ValidationError("simultaneous: deltas must be strictly increasing");
  }
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw ValidationError("simultaneous: alpha must lie in (0, 1)");
  if (cfg.B < 100) throw ValidationError("simultaneous: B must be at least 100");
  if (!(cfg.min_effective_fraction >= 0.0 && cfg.min_effective_fraction <= 1.0))
    throw ValidationError("simultaneous: min_effective_fraction must lie in [0, 1]");
}

std::optional<double> bootstrap_statistic(const std::vector<double>& orig_tau,
                                          const Eigen::Ref<const Eigen::VectorXd>& replicate_scores,
                                          const Eigen::Ref<const Eigen::VectorXd>& replicate_k,
                                          const std::vector<double>& deltas) {
  if (orig_tau.size() != deltas.size())
    throw ValidationError("bootstrap_statistic: one original estimate per delta is required");
  if (replicate_scores.size() != replicate_k.size())
    throw ValidationError("bootstrap_statistic: replicate vectors differ in length");
  double t = 0.0;
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    const TrimResult trim = apply_trim(replicate_k, gamma_fraction(replicate_k, deltas[j]));
    if (trim.n_retained < 2) return std::nullopt;
    const MeanSe m = masked_mean_se(replicate_scores, trim.retained);
    if (!(m.se > 0.0)) return std::nullopt;
    t = std::max(t, std::fabs(m.mean - orig_tau[j]) / m.se);
  }
  return t;
}

SimulResult simultaneous_trim(const Eigen::Ref<const Eigen::VectorXd>& scores,
                              const Eigen::Ref<const Eigen::VectorXd>& k_hat,
                              const SimulConfig& cfg) {
  validate(cfg);
  const Eigen::Index n = scores.size();
  if (k_hat.size() != n) throw ValidationError("simultaneous: scores and k_hat differ in length");
  if (n < 2) throw ValidationError("simultaneous: need at least 2 units");

  SimulResult out;
  out.alpha = cfg.alpha;
  std::vector<double> orig_tau;
  for (double delta : cfg.deltas) {
    const TrimResult trim = apply_trim(k_hat, gamma_fraction(k_hat, delta));
    const EffectEstimate est = estimate_effect(scores, trim, cfg.alpha);
    SimulRow row;
    row.delta = delta;
    row.gamma_hat = trim.gamma_hat;
    row.n_retained = trim.n_retained;
    row.tau_hat = est.tau_hat;
    row.se = est.se;
    row.ci_lo = est.ci_lo;
    row.ci_hi = est.ci_hi;
    out.rows.push_back(row);
    orig_tau.push_back(est.tau_hat);
  }

  // Replicates are evaluated on multiplicities over the units sorted by
  // (k, index): the fraction-rule cut-off of a replicate is then the first
  // sorted position whose cumulative multiplicity reaches ceil((1 - delta) n),
  // extended over ties in k. Same statistic as bootstrap_statistic.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return k_hat(a) < k_hat(b) || (k_hat(a) == k_hat(b) && a < b);
  });
  std::vector<Eigen::Index> rank_of(static_cast<std::size_t>(n));
  std::vector<double> sorted_k(static_cast<std::size_t>(n));
  std::vector<double> sorted_s(static_cast<std::size_t>(n));
  for (std::size_t p = 0; p < order.size(); ++p) {
    rank_of[static_cast<std::size_t>(order[p])] = static_cast<Eigen::Index>(p);
    sorted_k[p] = k_hat(order[p]);
    sorted_s[p] = scores(order[p]);
  }
  std::vector<std::size_t> needed;
  for (double delta : cfg.deltas) {
    auto m = static_cast<std::size_t>(std::ceil((1.0 - delta) * static_cast<double>(n)));
    needed.push_back(std::clamp<std::size_t>(m, 1, static_cast<std::size_t>(n)));
  }

  const auto B = static_cast<std::size_t>(cfg.B);
  std::vector<double> stats(B, std::numeric_limits<double>::quiet_NaN());
  parallel_for(B, cfg.threads, [&](std::size_t b) {
    CounterRng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(b)}));
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i)
      ++count[static_cast<std::size_t>(rank_of[rng.index(static_cast<std::uint64_t>(n))])];
    double t = 0.0;
    for (std::size_t j = 0; j < needed.size(); ++j) {
      std::size_t cum = 0;
      std::size_t end = 0;
      double sum = 0.0;
      double lo = INFINITY;
      double hi = -INFINITY;
      while (cum < needed[j]) {
        const int c = count[end];
        if (c > 0) {
          cum += static_cast<std::size_t>(c);
          sum += c * sorted_s[end];
          lo = std::min(lo, sorted_s[end]);
          hi = std::max(hi, sorted_s[end]);
        }
        ++end;
      }
      const double gamma = sorted_k[end - 1];
      for (; end < sorted_k.size() && sorted_k[end] == gamma; ++end) {
        const int c = count[end];
        if (c > 0) {
          cum += static_cast<std::size_t>(c);
          sum += c * sorted_s[end];
          lo = std::min(lo, sorted_s[end]);
          hi = std::max(hi, sorted_s[end]);
        }
      }
      if (cum < 2 || lo == hi) return;
      const auto count_d = static_cast<double>(cum);
      const double mean = sum / count_d;
      double ss = 0.0;
      for (std::size_t p = 0; p < end; ++p) {
        const double r = sorted_s[p] - mean;
        ss += count[p] * r * r;
      }
      const double se = std::sqrt(ss / (count_d - 1.0) / count_d);
      if (!(se > 0.0)) return;
      t = std::max(t, std::fabs(mean - orig_tau[j]) / se);
    }
    stats[b] = t;
  });

  std::vector<double> valid;
  valid.reserve(B);
  for (double t : stats)
    if (!std::isnan(t)) valid.push_back(t);
  out.effective_B = static_cast<int>(valid.size());
  out.skipped_B = cfg.B - out.effective_B;
  if (valid.empty() ||
      static_cast<double>(valid.size()) < cfg.min_effective_fraction * static_cast<double>(cfg.B))
    throw NumericError("degenerate bootstrap: only " + std::to_string(valid.size()) + " of " +
                       std::to_string(cfg.B) + " replicates were valid");

  std::sort(valid.begin(), valid.end());
  const auto b_eff = static_cast<double>(valid.size());
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - cfg.alpha) * (b_eff + 1.0)));
  rank = std::clamp<std::size_t>(rank, 1, valid.size());
  out.q = valid[rank - 1];

  for (auto& row : out.rows) {
    row.simul_lo = row.tau_hat - out.q * row.se;
    row.simul_hi = row.tau_hat + out.q * row.se;
  }
  return out;
}

SimulResult simultaneous_trim(const Dataset& data, const NuisanceEstimates& nuis,
                              const Eigen::Ref<const Eigen::VectorXd>& k_hat,
                              const SimulConfig& cfg) {
  return simultaneous_trim(aipw_scores(data, nuis), k_hat, cfg);
}

}  // namespace hettrim
