#include "hettrim/nuisance.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "hettrim/errors.hpp"
#include "hettrim/rng.hpp"

namespace hettrim {

Eigen::VectorXi assign_folds(Eigen::Index n, int folds, std::uint64_t seed) {
  Eigen::VectorXi fold_of = Eigen::VectorXi::Zero(n);
  if (folds <= 1) return fold_of;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  CounterRng rng(derive_seed(seed, {0xf01d5ULL}));
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  for (Eigen::Index pos = 0; pos < n; ++pos)
    fold_of(perm[static_cast<std::size_t>(pos)]) = static_cast<int>(pos * folds / n);
  return fold_of;
}

namespace {

Eigen::VectorXi rows_where(const Eigen::VectorXi& mask_src, auto&& pred) {
  std::vector<int> rows;
  for (Eigen::Index i = 0; i < mask_src.size(); ++i)
    if (pred(i)) rows.push_back(static_cast<int>(i));
  return Eigen::Map<Eigen::VectorXi>(rows.data(), static_cast<Eigen::Index>(rows.size()));
}

std::unique_ptr<Regressor> fit(const CrossFitOptions& options, const RegressorSpec& spec,
                               const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return options.factory ? options.factory(spec, x, y) : fit_regressor(spec, x, y);
}

}  // namespace

NuisanceEstimates cross_fit_nuisances(const Dataset& data, const RegressorSpec& spec,
                                      const CrossFitOptions& options) {
  const auto [lo, hi] = options.clip;
  if (!(0.0 < lo && lo < hi && hi < 1.0))
    throw ValidationError("cross_fit_nuisances: clip bounds must satisfy 0 < lo < hi < 1");
  if (!(options.variance_floor > 0.0))
    throw ValidationError("cross_fit_nuisances: variance_floor must be positive");
  if (options.folds < 1) throw ValidationError("cross_fit_nuisances: folds must be >= 1");
  validate(data, options.folds);

  const Eigen::Index n = data.size();
  const int folds = options.folds;
  NuisanceEstimates out;
  out.clip = options.clip;
  out.variance_floor = options.variance_floor;
  out.fold_of = assign_folds(n, folds, spec.seed);
  out.e_hat.resize(n);
  out.mu0_hat.resize(n);
  out.mu1_hat.resize(n);
  out.var0_hat.resize(n);
  out.var1_hat.resize(n);
  out.fold_sizes.assign(static_cast<std::size_t>(folds), 0);
  for (Eigen::Index i = 0; i < n; ++i) ++out.fold_sizes[static_cast<std::size_t>(out.fold_of(i))];

  const Eigen::VectorXd z = data.treatment.cast<double>();
  const Eigen::VectorXd y2 = data.response.array().square();
  Eigen::VectorXd e_raw(n);
  Eigen::VectorXd m2_0(n);
  Eigen::VectorXd m2_1(n);
  // Local-linear fits can put m2 below mu^2 far more often than plain averages
  // do, so the variance moments come from plain neighbour means in that mode.
  const bool plain_moments = spec.local_linear && !options.factory;
  Eigen::VectorXd m1_0(n);
  Eigen::VectorXd m1_1(n);

  for (int k = 0; k < folds; ++k) {
    const auto& fold_of = out.fold_of;
    const Eigen::VectorXi train = rows_where(fold_of, [&](Eigen::Index i) {
      return folds == 1 || fold_of(i) != k;
    });
    const Eigen::VectorXi test = rows_where(fold_of, [&](Eigen::Index i) {
      return folds == 1 || fold_of(i) == k;
    });
    const Eigen::VectorXi train0 = rows_where(fold_of, [&](Eigen::Index i) {
      return (folds == 1 || fold_of(i) != k) && data.treatment(i) == 0;
    });
    const Eigen::VectorXi train1 = rows_where(fold_of, [&](Eigen::Index i) {
      return (folds == 1 || fold_of(i) != k) && data.treatment(i) == 1;
    });
    const std::string where = folds == 1 ? "" : " in training complement of fold " + std::to_string(k);
    if (train0.size() == 0) throw ValidationError("empty control arm" + where);
    if (train1.size() == 0) throw ValidationError("empty treated arm" + where);

    RegressorSpec fold_spec = spec;
    RegressorSpec moment_spec = spec;
    moment_spec.local_linear = false;
    const Eigen::MatrixXd x_test = data.covariates(test, Eigen::all);
    auto seeded = [&](std::uint64_t which) {
      fold_spec.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(k), which});
      return fold_spec;
    };

    const Eigen::MatrixXd x_train = data.covariates(train, Eigen::all);
    e_raw(test) = fit(options, seeded(0), x_train, z(train))->predict(x_test);

    const Eigen::MatrixXd x0 = data.covariates(train0, Eigen::all);
    out.mu0_hat(test) = fit(options, seeded(1), x0, data.response(train0))->predict(x_test);
    if (plain_moments) {
      m1_0(test) = fit_regressor(moment_spec, x0, data.response(train0))->predict(x_test);
      m2_0(test) = fit_regressor(moment_spec, x0, y2(train0))->predict(x_test);
    } else {
      m2_0(test) = fit(options, seeded(2), x0, y2(train0))->predict(x_test);
    }

    const Eigen::MatrixXd x1 = data.covariates(train1, Eigen::all);
    out.mu1_hat(test) = fit(options, seeded(3), x1, data.response(train1))->predict(x_test);
    if (plain_moments) {
      m1_1(test) = fit_regressor(moment_spec, x1, data.response(train1))->predict(x_test);
      m2_1(test) = fit_regressor(moment_spec, x1, y2(train1))->predict(x_test);
    } else {
      m2_1(test) = fit(options, seeded(4), x1, y2(train1))->predict(x_test);
    }
  }

  out.e_raw_min = e_raw.minCoeff();
  out.e_raw_max = e_raw.maxCoeff();
  out.e_hat = e_raw.cwiseMax(lo).cwiseMin(hi);
  if (!plain_moments) {
    m1_0 = out.mu0_hat;
    m1_1 = out.mu1_hat;
  }
  const double floor = options.variance_floor;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.var0_hat(i) = conditional_variance_from_moments(m2_0(i), m1_0(i), floor);
    out.var1_hat(i) = conditional_variance_from_moments(m2_1(i), m1_1(i), floor);
    out.n_floored_var0 += out.var0_hat(i) == floor;
    out.n_floored_var1 += out.var1_hat(i) == floor;
  }
  return out;
}

}  // namespace hettrim

namespace hettrim {

double relative_variance_floor(const Eigen::Ref<const Eigen::VectorXd>& y, double rel) {
  if (!(rel > 0.0)) throw ValidationError("variance_floor_rel must be positive");
  if (y.size() < 2) return rel;
  const double var = (y.array() - y.mean()).square().sum() / static_cast<double>(y.size() - 1);
  return var > 0.0 ? rel * var : rel;
}

}  // namespace hettrim
