#include "hettrim/trimming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hettrim/errors.hpp"

namespace hettrim {

std::string to_string(KhatMode mode) {
  return mode == KhatMode::homoscedastic ? "homoscedastic" : "heteroscedastic";
}

KhatMode khat_mode_from_string(const std::string& name) {
  if (name == "homoscedastic") return KhatMode::homoscedastic;
  if (name == "heteroscedastic") return KhatMode::heteroscedastic;
  throw ValidationError("unknown trimming mode '" + name + "'");
}

std::string rule_name(const TrimRule& rule) {
  struct {
    std::string operator()(const rule::Constant&) const { return "constant"; }
    std::string operator()(const rule::VarMin&) const { return "varmin"; }
    std::string operator()(const rule::Fraction&) const { return "fraction"; }
  } visitor;
  return std::visit(visitor, rule);
}

void validate(const TrimSpec& spec) {
  if (const auto* f = std::get_if<rule::Fraction>(&spec.rule)) {
    if (!(f->delta >= 0.0 && f->delta < 1.0))
      throw ValidationError("fraction rule: delta must lie in [0, 1)");
  }
  if (const auto* c = std::get_if<rule::Constant>(&spec.rule)) {
    if (!std::isfinite(c->gamma)) throw ValidationError("constant rule: gamma must be finite");
  }
}

Eigen::VectorXd compute_khat(const NuisanceEstimates& nuis, KhatMode mode) {
  const Eigen::ArrayXd e = nuis.e_hat.array();
  if (mode == KhatMode::homoscedastic) return (1.0 / (e * (1.0 - e))).matrix();
  return (nuis.var1_hat.array() / e + nuis.var0_hat.array() / (1.0 - e)).matrix();
}

double varmin_objective(const Eigen::Ref<const Eigen::VectorXd>& k_hat, double gamma) {
  const auto n = static_cast<double>(k_hat.size());
  double sum = 0.0;
  double count = 0.0;
  for (Eigen::Index i = 0; i < k_hat.size(); ++i) {
    if (k_hat(i) <= gamma) {
      sum += k_hat(i);
      count += 1.0;
    }
  }
  if (count == 0.0) return std::numeric_limits<double>::infinity();
  const double frac = count / n;
  return (sum / n) / (frac * frac);
}

double gamma_varmin(const Eigen::Ref<const Eigen::VectorXd>& k_hat) {
  const Eigen::Index n = k_hat.size();
  if (n == 0) throw ValidationError("gamma_varmin: empty input");
  std::vector<double> sorted(k_hat.data(), k_hat.data() + n);
  std::sort(sorted.begin(), sorted.end());

  // Sweep distinct values in ascending order; the objective only changes at them.
  const auto nd = static_cast<double>(n);
  double best = std::numeric_limits<double>::infinity();
  double best_gamma = sorted.back();
  double sum = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double v = sorted[i];
    while (i < sorted.size() && sorted[i] == v) sum += sorted[i++];
    const double frac = static_cast<double>(i) / nd;
    const double objective = (sum / nd) / (frac * frac);
    if (objective <= best) {
      best = objective;
      best_gamma = v;
    }
  }
  return best_gamma;
}

double gamma_fraction(const Eigen::Ref<const Eigen::VectorXd>& k_hat, double delta) {
  if (!(delta >= 0.0 && delta < 1.0))
    throw ValidationError("gamma_fraction: delta must lie in [0, 1)");
  const Eigen::Index n = k_hat.size();
  if (n == 0) throw ValidationError("gamma_fraction: empty input");
  auto m = static_cast<Eigen::Index>(std::ceil((1.0 - delta) * static_cast<double>(n)));
  m = std::clamp<Eigen::Index>(m, 1, n);
  std::vector<double> values(k_hat.data(), k_hat.data() + n);
  std::nth_element(values.begin(), values.begin() + (m - 1), values.end());
  return values[static_cast<std::size_t>(m - 1)];
}

TrimResult apply_trim(const Eigen::Ref<const Eigen::VectorXd>& k_hat, double gamma_hat) {
  TrimResult out;
  out.k_hat = k_hat;
  out.gamma_hat = gamma_hat;
  out.retained = k_hat.array() <= gamma_hat;
  out.n_retained = out.retained.count();
  return out;
}

double select_gamma(const Eigen::Ref<const Eigen::VectorXd>& k_hat, const TrimRule& rule) {
  struct {
    const Eigen::Ref<const Eigen::VectorXd>& k;
    double operator()(const rule::Constant& c) const { return gamma_constant(c.gamma); }
    double operator()(const rule::VarMin&) const { return gamma_varmin(k); }
    double operator()(const rule::Fraction& f) const { return gamma_fraction(k, f.delta); }
  } visitor{k_hat};
  return std::visit(visitor, rule);
}

TrimResult trim(const NuisanceEstimates& nuis, const TrimSpec& spec) {
  validate(spec);
  const Eigen::VectorXd k_hat = compute_khat(nuis, spec.mode);
  return apply_trim(k_hat, select_gamma(k_hat, spec.rule));
}

}  // namespace hettrim
