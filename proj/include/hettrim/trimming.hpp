#pragma once

#include <string>
#include <variant>

#include <Eigen/Dense>

#include "hettrim/nuisance.hpp"

namespace hettrim {

enum class KhatMode { homoscedastic, heteroscedastic };

std::string to_string(KhatMode mode);
KhatMode khat_mode_from_string(const std::string& name);

namespace rule {
/// Pre-committed cut-off.
struct Constant {
  double gamma = 1.0 / 0.1 + 1.0 / 0.9;
};
/// Minimize the sample efficient-variance objective over the observed k values.
struct VarMin {};
/// Trim a fraction delta of the units with the largest k.
struct Fraction {
  double delta = 0.0;
};
}  // namespace rule

using TrimRule = std::variant<rule::Constant, rule::VarMin, rule::Fraction>;

struct TrimSpec {
  KhatMode mode = KhatMode::heteroscedastic;
  TrimRule rule = rule::VarMin{};
};

std::string rule_name(const TrimRule& rule);

/// Throws ValidationError for delta outside [0, 1) or a non-finite constant.
void validate(const TrimSpec& spec);

struct TrimResult {
  Eigen::VectorXd k_hat;
  double gamma_hat = 0.0;
  Eigen::Array<bool, Eigen::Dynamic, 1> retained;
  Eigen::Index n_retained = 0;
};

/// heteroscedastic: var1/e + var0/(1-e); homoscedastic: 1/(e(1-e)).
Eigen::VectorXd compute_khat(const NuisanceEstimates& nuis, KhatMode mode);

inline double gamma_constant(double gamma) { return gamma; }

/// Sample efficient-variance objective at cut-off gamma:
/// mean(k * 1{k <= gamma}) / mean(1{k <= gamma})^2. Infinite when nothing is retained.
double varmin_objective(const Eigen::Ref<const Eigen::VectorXd>& k_hat, double gamma);

/// Minimizer of varmin_objective over the distinct values of k_hat; ties go
/// to the largest cut-off.
double gamma_varmin(const Eigen::Ref<const Eigen::VectorXd>& k_hat);

/// The ceil((1 - delta) n)-th order statistic of k_hat (1-based).
double gamma_fraction(const Eigen::Ref<const Eigen::VectorXd>& k_hat, double delta);

/// Inclusive threshold: unit i is retained iff k_hat[i] <= gamma_hat.
TrimResult apply_trim(const Eigen::Ref<const Eigen::VectorXd>& k_hat, double gamma_hat);

/// compute_khat, the cut-off named by spec.rule, then apply_trim.
TrimResult trim(const NuisanceEstimates& nuis, const TrimSpec& spec);

/// Cut-off for an already computed k_hat.
double select_gamma(const Eigen::Ref<const Eigen::VectorXd>& k_hat, const TrimRule& rule);

}  // namespace hettrim
