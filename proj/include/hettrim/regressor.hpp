#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hettrim {

enum class RegressorMethod { knn, bagged_trees };

std::string to_string(RegressorMethod method);
RegressorMethod regressor_method_from_string(const std::string& name);

struct RegressorSpec {
  RegressorMethod method = RegressorMethod::knn;
  int knn_k = 10;
  /// Standardize each covariate by its training mean and sd before computing
  /// knn distances. Off by default: distances are unscaled Euclidean.
  bool standardize = false;
  /// Replace the neighbour mean by the intercept of a least-squares linear fit
  /// on the k neighbours, centred at the query.
  bool local_linear = false;
  int trees = 200;
  int max_depth = 8;
  int min_leaf = 5;
  /// Candidate split features per node; 0 resolves to d at fit time.
  int mtry = 0;
  std::uint64_t seed = 0;
};

/// A fitted regression function x -> real.
class Regressor {
 public:
  virtual ~Regressor() = default;

  /// One prediction per row of `queries`.
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& queries) const = 0;

  double predict_one(const Eigen::RowVectorXd& x) const { return predict(x)(0); }
};

/// Factory used by cross-fitting. Alternate learners plug in here.
using RegressorFactory = std::function<std::unique_ptr<Regressor>(
    const RegressorSpec&, const Eigen::MatrixXd& features, const Eigen::VectorXd& targets)>;

/// k-nearest-neighbour mean. Neighbours are ordered by (squared distance,
/// training index), so ties resolve deterministically. Queries go through an
/// exact kd-tree search.
class KnnRegressor final : public Regressor {
 public:
  KnnRegressor(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, int k,
               bool standardize, bool local_linear = false);

  Eigen::VectorXd predict(const Eigen::MatrixXd& queries) const override;

 private:
  struct KdNode {
    Eigen::Index begin = 0;  // column range [begin, end) of points_
    Eigen::Index end = 0;
    int axis = -1;           // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
  };
  int build(Eigen::Index begin, Eigen::Index end);

  Eigen::MatrixXd points_;  // d x m, columns permuted into kd-tree order
  Eigen::VectorXd targets_;
  std::vector<Eigen::Index> original_;  // training index of each column
  std::vector<KdNode> nodes_;
  Eigen::RowVectorXd shift_;
  Eigen::RowVectorXd scale_;
  int k_;
  bool local_linear_ = false;
};

/// Bagged CART regression trees: each tree is fit to a seeded bootstrap
/// resample, limited to `max_depth`, with at least `min_leaf` resampled
/// observations per leaf and `mtry` randomly drawn candidate features per split.
class BaggedTreesRegressor final : public Regressor {
 public:
  BaggedTreesRegressor(const RegressorSpec& spec, const Eigen::MatrixXd& features,
                       const Eigen::VectorXd& targets);

  Eigen::VectorXd predict(const Eigen::MatrixXd& queries) const override;

  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
  };
  using Tree = std::vector<Node>;

 private:
  std::vector<Tree> trees_;
};

/// Fits the learner named by spec.method. Throws ValidationError on an empty
/// training set, knn_k larger than the training set, or mtry > d.
std::unique_ptr<Regressor> fit_regressor(const RegressorSpec& spec,
                                         const Eigen::MatrixXd& features,
                                         const Eigen::VectorXd& targets);

}  // namespace hettrim
