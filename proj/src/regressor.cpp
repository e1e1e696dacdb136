#include "hettrim/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "hettrim/errors.hpp"
#include "hettrim/rng.hpp"

namespace hettrim {

std::string to_string(RegressorMethod method) {
  switch (method) {
    case RegressorMethod::knn:
      return "knn";
    case RegressorMethod::bagged_trees:
      return "bagged_trees";
  }
  return "unknown";
}

RegressorMethod regressor_method_from_string(const std::string& name) {
  if (name == "knn") return RegressorMethod::knn;
  if (name == "bagged_trees") return RegressorMethod::bagged_trees;
  throw ValidationError("unknown regressor method '" + name + "'");
}

// ---------------------------------------------------------------------------
// knn

namespace {
constexpr Eigen::Index kLeafSize = 16;
}  // namespace

KnnRegressor::KnnRegressor(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                           int k, bool standardize, bool local_linear)
    : k_(k), local_linear_(local_linear) {
  const Eigen::Index m = features.rows();
  const Eigen::Index d = features.cols();
  shift_ = Eigen::RowVectorXd::Zero(d);
  scale_ = Eigen::RowVectorXd::Ones(d);
  if (standardize) {
    shift_ = features.colwise().mean();
    for (Eigen::Index j = 0; j < d; ++j) {
      const double sd =
          m > 1 ? std::sqrt((features.col(j).array() - shift_(j)).square().sum() / (m - 1)) : 0.0;
      scale_(j) = sd > 0.0 ? sd : 1.0;
    }
  }
  points_ = ((features.rowwise() - shift_).array().rowwise() / scale_.array()).matrix().transpose();
  targets_ = targets;
  original_.resize(static_cast<std::size_t>(m));
  std::iota(original_.begin(), original_.end(), Eigen::Index{0});
  build(0, m);
  Eigen::MatrixXd permuted(d, m);
  Eigen::VectorXd permuted_targets(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    permuted.col(j) = points_.col(original_[static_cast<std::size_t>(j)]);
    permuted_targets(j) = targets(original_[static_cast<std::size_t>(j)]);
  }
  points_ = std::move(permuted);
  targets_ = std::move(permuted_targets);
}

// Orders original_[begin, end) so that each node covers a contiguous range.
// points_ is still in training order while this runs.
int KnnRegressor::build(Eigen::Index begin, Eigen::Index end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end, -1, 0.0, -1, -1});
  if (end - begin <= kLeafSize) return id;
  const Eigen::Index d = points_.rows();
  int axis = 0;
  double widest = -1.0;
  for (Eigen::Index c = 0; c < d; ++c) {
    double lo = INFINITY;
    double hi = -INFINITY;
    for (Eigen::Index j = begin; j < end; ++j) {
      const double v = points_(c, original_[static_cast<std::size_t>(j)]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = static_cast<int>(c);
    }
  }
  if (widest <= 0.0) return id;  // all points identical
  const Eigen::Index mid = begin + (end - begin) / 2;
  auto first = original_.begin() + begin;
  std::nth_element(first, original_.begin() + mid, original_.begin() + end,
                   [&](Eigen::Index a, Eigen::Index b) {
                     return std::pair(points_(axis, a), a) < std::pair(points_(axis, b), b);
                   });
  const double split = points_(axis, original_[static_cast<std::size_t>(mid)]);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split = split;
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

Eigen::VectorXd KnnRegressor::predict(const Eigen::MatrixXd& queries) const {
  const Eigen::Index d = points_.rows();
  const auto k = static_cast<std::size_t>(k_);
  Eigen::VectorXd out(queries.rows());
  // Max-heap on (squared distance, training index) holding the k best so far.
  struct Entry {
    double dist;
    Eigen::Index original;
    Eigen::Index column;
    bool operator<(const Entry& o) const {
      return dist < o.dist || (dist == o.dist && original < o.original);
    }
  };
  std::vector<Entry> heap;
  heap.reserve(k + 1);
  std::vector<std::pair<int, double>> stack;  // (node, lower bound on squared distance)
  Eigen::VectorXd q(d);
  for (Eigen::Index r = 0; r < queries.rows(); ++r) {
    q = ((queries.row(r) - shift_).array() / scale_.array()).matrix().transpose();
    heap.clear();
    stack.clear();
    stack.emplace_back(0, 0.0);
    while (!stack.empty()) {
      const auto [id, bound] = stack.back();
      stack.pop_back();
      // Equal bounds are still searched: a tie may win on training index.
      if (heap.size() == k && bound > heap.front().dist) continue;
      const KdNode& node = nodes_[static_cast<std::size_t>(id)];
      if (node.axis < 0) {
        for (Eigen::Index j = node.begin; j < node.end; ++j) {
          const double* p = points_.col(j).data();
          double s = 0.0;
          for (Eigen::Index c = 0; c < d; ++c) {
            const double diff = p[c] - q(c);
            s += diff * diff;
          }
          const Entry e{s, original_[static_cast<std::size_t>(j)], j};
          if (heap.size() < k) {
            heap.push_back(e);
            std::push_heap(heap.begin(), heap.end());
          } else if (e < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = e;
            std::push_heap(heap.begin(), heap.end());
          }
        }
        continue;
      }
      const double diff = q(node.axis) - node.split;
      const double far_bound = std::max(bound, diff * diff);
      // Push the far child first so the near child is searched first.
      if (diff < 0.0) {
        stack.emplace_back(node.right, far_bound);
        stack.emplace_back(node.left, bound);
      } else {
        stack.emplace_back(node.left, far_bound);
        stack.emplace_back(node.right, bound);
      }
    }
    std::sort(heap.begin(), heap.end());
    double sum = 0.0;
    for (const auto& h : heap) sum += targets_(h.column);
    out(r) = sum / k_;
    if (local_linear_ && heap.size() > static_cast<std::size_t>(d + 1)) {
      Eigen::MatrixXd design(static_cast<Eigen::Index>(heap.size()), d + 1);
      Eigen::VectorXd y(static_cast<Eigen::Index>(heap.size()));
      for (Eigen::Index i = 0; i < design.rows(); ++i) {
        const auto& h = heap[static_cast<std::size_t>(i)];
        design(i, 0) = 1.0;
        design.row(i).tail(d) = (points_.col(h.column) - q).transpose();
        y(i) = targets_(h.column);
      }
      Eigen::MatrixXd gram = design.transpose() * design;
      const double ridge = 1e-8 * gram.diagonal().tail(d).sum() + 1e-12;
      gram.diagonal().tail(d).array() += ridge;
      out(r) = gram.ldlt().solve(design.transpose() * y)(0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// bagged trees

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  const RegressorSpec& spec;
  int mtry;
  CounterRng rng;
  BaggedTreesRegressor::Tree nodes;
  std::vector<int> features;
  std::vector<std::pair<double, double>> column;  // (feature value, target)

  int build(std::vector<Eigen::Index>& rows, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    double sum = 0.0;
    for (auto r : rows) sum += y(r);
    const auto count = static_cast<double>(rows.size());
    nodes[id].value = sum / count;

    if (depth >= spec.max_depth || rows.size() < 2 * static_cast<std::size_t>(spec.min_leaf))
      return id;

    // Partial Fisher-Yates draw of mtry candidate features.
    for (int j = 0; j < mtry; ++j) {
      const auto pick = j + static_cast<int>(rng.index(features.size() - j));
      std::swap(features[j], features[pick]);
    }

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    const double total_sq = sum * sum / count;
    for (int c = 0; c < mtry; ++c) {
      const int f = features[c];
      column.clear();
      for (auto r : rows) column.emplace_back(x(r, f), y(r));
      std::sort(column.begin(), column.end());
      double left_sum = 0.0;
      const std::size_t m = column.size();
      for (std::size_t i = 0; i + 1 < m; ++i) {
        left_sum += column[i].second;
        const std::size_t nl = i + 1;
        if (nl < static_cast<std::size_t>(spec.min_leaf)) continue;
        if (m - nl < static_cast<std::size_t>(spec.min_leaf)) break;
        if (column[i].first == column[i + 1].first) continue;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(m - nl) - total_sq;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (column[i].first + column[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<Eigen::Index> left;
    std::vector<Eigen::Index> right;
    for (auto r : rows) (x(r, best_feature) <= best_threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    const int l = build(left, depth + 1);
    const int rgt = build(right, depth + 1);
    nodes[id].left = l;
    nodes[id].right = rgt;
    return id;
  }
};

double evaluate(const BaggedTreesRegressor::Tree& tree, const Eigen::MatrixXd& q, Eigen::Index r) {
  int node = 0;
  while (tree[node].feature >= 0)
    node = q(r, tree[node].feature) <= tree[node].threshold ? tree[node].left : tree[node].right;
  return tree[node].value;
}

}  // namespace

BaggedTreesRegressor::BaggedTreesRegressor(const RegressorSpec& spec,
                                           const Eigen::MatrixXd& features,
                                           const Eigen::VectorXd& targets) {
  const Eigen::Index m = features.rows();
  const int d = static_cast<int>(features.cols());
  const int mtry = spec.mtry == 0 ? d : spec.mtry;
  trees_.reserve(static_cast<std::size_t>(spec.trees));
  for (int t = 0; t < spec.trees; ++t) {
    TreeBuilder builder{features, targets, spec, mtry,
                        CounterRng(derive_seed(spec.seed, {static_cast<std::uint64_t>(t)})),
                        {}, {}, {}};
    builder.features.resize(static_cast<std::size_t>(d));
    std::iota(builder.features.begin(), builder.features.end(), 0);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(m));
    for (auto& r : rows) r = static_cast<Eigen::Index>(builder.rng.index(static_cast<std::uint64_t>(m)));
    builder.build(rows, 0);
    trees_.push_back(std::move(builder.nodes));
  }
}

Eigen::VectorXd BaggedTreesRegressor::predict(const Eigen::MatrixXd& queries) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(queries.rows());
  for (Eigen::Index r = 0; r < queries.rows(); ++r) {
    double s = 0.0;
    for (const auto& tree : trees_) s += evaluate(tree, queries, r);
    out(r) = s / static_cast<double>(trees_.size());
  }
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Regressor> fit_regressor(const RegressorSpec& spec,
                                         const Eigen::MatrixXd& features,
                                         const Eigen::VectorXd& targets) {
  const Eigen::Index m = features.rows();
  if (m < 1) throw ValidationError("fit_regressor: empty training set");
  if (targets.size() != m) throw ValidationError("fit_regressor: features/targets length mismatch");
  switch (spec.method) {
    case RegressorMethod::knn:
      if (spec.knn_k < 1) throw ValidationError("fit_regressor: knn_k must be positive");
      if (spec.knn_k > m)
        throw ValidationError("fit_regressor: knn_k = " + std::to_string(spec.knn_k) +
                              " exceeds training-set size " + std::to_string(m));
      return std::make_unique<KnnRegressor>(features, targets, spec.knn_k, spec.standardize,
                                            spec.local_linear);
    case RegressorMethod::bagged_trees:
      if (spec.trees < 1 || spec.max_depth < 1 || spec.min_leaf < 1 || spec.mtry < 0)
        throw ValidationError("fit_regressor: trees, max_depth and min_leaf must be positive");
      if (spec.mtry > features.cols())
        throw ValidationError("fit_regressor: mtry = " + std::to_string(spec.mtry) +
                              " exceeds d = " + std::to_string(features.cols()));
      return std::make_unique<BaggedTreesRegressor>(spec, features, targets);
  }
  throw ValidationError("fit_regressor: unknown method");
}

}  // namespace hettrim
