#pragma once

#include <Eigen/Dense>

namespace hettrim {

/// Observed data for n units: covariates X (n x d), response Y, binary treatment Z.
struct Dataset {
  Eigen::MatrixXd covariates;
  Eigen::VectorXd response;
  Eigen::VectorXi treatment;

  Eigen::Index size() const { return response.size(); }
  Eigen::Index dim() const { return covariates.cols(); }

  Eigen::Index n_treated() const { return treatment.sum(); }
  Eigen::Index n_control() const { return size() - n_treated(); }

  /// Rows of the dataset selected by `rows`, in the given order.
  Dataset subset(const Eigen::VectorXi& rows) const;
};

/// Checks shape agreement, finiteness, Z in {0,1}, both arms nonempty, d >= 1
/// and n >= 2 * min_folds. Throws ValidationError naming the first violation.
void validate(const Dataset& data, int min_folds = 1);

}  // namespace hettrim
