#include "hettrim/dataset.hpp"

#include <string>

#include "hettrim/errors.hpp"

namespace hettrim {

Dataset Dataset::subset(const Eigen::VectorXi& rows) const {
  Dataset out;
  out.covariates = covariates(rows, Eigen::all);
  out.response = response(rows);
  out.treatment = treatment(rows);
  return out;
}

void validate(const Dataset& data, int min_folds) {
  const Eigen::Index n = data.size();
  if (data.covariates.rows() != n || data.treatment.size() != n)
    throw ValidationError("dataset: covariates, response and treatment lengths differ");
  if (data.dim() < 1) throw ValidationError("dataset: at least one covariate is required");
  if (n < 2 * static_cast<Eigen::Index>(std::max(min_folds, 1)))
    throw ValidationError("dataset: need at least " + std::to_string(2 * std::max(min_folds, 1)) +
                          " units, got " + std::to_string(n));
  if (!data.covariates.allFinite()) throw ValidationError("dataset: non-finite covariate value");
  if (!data.response.allFinite()) throw ValidationError("dataset: non-finite response value");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.treatment(i) != 0 && data.treatment(i) != 1)
      throw ValidationError("dataset: treatment at row " + std::to_string(i) + " is not 0 or 1");
  }
  if (data.n_treated() == 0) throw ValidationError("dataset: empty treated arm");
  if (data.n_control() == 0) throw ValidationError("dataset: empty control arm");
}

}  // namespace hettrim
