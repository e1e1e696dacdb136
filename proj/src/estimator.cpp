#include "hettrim/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "hettrim/errors.hpp"
#include "hettrim/normal.hpp"

namespace hettrim {

Eigen::VectorXd aipw_scores(const Dataset& data, const NuisanceEstimates& nuis) {
  const Eigen::ArrayXd z = data.treatment.cast<double>().array();
  const Eigen::ArrayXd y = data.response.array();
  const Eigen::ArrayXd e = nuis.e_hat.array();
  const Eigen::ArrayXd mu0 = nuis.mu0_hat.array();
  const Eigen::ArrayXd mu1 = nuis.mu1_hat.array();
  return (mu1 + z * (y - mu1) / e - mu0 - (1.0 - z) * (y - mu0) / (1.0 - e)).matrix();
}

MeanSe masked_mean_se(const Eigen::Ref<const Eigen::VectorXd>& scores,
                      const Eigen::Array<bool, Eigen::Dynamic, 1>& mask) {
  MeanSe out;
  double sum = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (!mask(i)) continue;
    const double s = scores(i);
    if (out.count == 0) lo = hi = s;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    sum += s;
    ++out.count;
  }
  if (out.count == 0) return out;
  out.mean = sum / static_cast<double>(out.count);
  if (out.count < 2 || lo == hi) return out;
  double ss = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (!mask(i)) continue;
    const double r = scores(i) - out.mean;
    ss += r * r;
  }
  const auto m = static_cast<double>(out.count);
  out.se = std::sqrt(ss / (m - 1.0) / m);
  return out;
}

double trimmed_estimate(const Eigen::Ref<const Eigen::VectorXd>& scores, const TrimResult& trim) {
  if (trim.n_retained < 1) throw NumericError("empty sub-population");
  return masked_mean_se(scores, trim.retained).mean;
}

double standard_error(const Eigen::Ref<const Eigen::VectorXd>& scores, const TrimResult& trim) {
  if (trim.n_retained < 2)
    throw NumericError("standard_error: need at least 2 retained units, got " +
                       std::to_string(trim.n_retained));
  return masked_mean_se(scores, trim.retained).se;
}

std::pair<double, double> normal_ci(double tau_hat, double se, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("normal_ci: alpha must lie in (0, 1)");
  const double half = normal_quantile(1.0 - alpha / 2.0) * se;
  return {tau_hat - half, tau_hat + half};
}

EffectEstimate estimate_effect(const Eigen::Ref<const Eigen::VectorXd>& scores,
                               const TrimResult& trim, double alpha) {
  if (trim.n_retained < 1) throw NumericError("empty sub-population");
  if (trim.n_retained < 2)
    throw NumericError("standard_error: need at least 2 retained units, got 1");
  const MeanSe m = masked_mean_se(scores, trim.retained);
  EffectEstimate out;
  out.tau_hat = m.mean;
  out.se = m.se;
  std::tie(out.ci_lo, out.ci_hi) = normal_ci(m.mean, m.se, alpha);
  out.n_retained = m.count;
  out.alpha = alpha;
  return out;
}

}  // namespace hettrim
