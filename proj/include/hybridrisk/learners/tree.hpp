#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hybridrisk/common.hpp"
#include "json.hpp"

namespace hybridrisk::learners {

/// Flat binary tree node. Internal nodes route x[feature] <= threshold to the
/// left child. Leaves carry `value`: class-1 frequency for classification
/// trees, the Newton leaf weight for boosting trees.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> row) const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t leaf_count() const;
  std::size_t depth() const;

  nlohmann::json to_json() const;
  static Tree from_json(const nlohmann::json& j);

  bool operator==(const Tree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

/// Per-feature row orderings of a training matrix, sorted by (value, row).
/// Computed once and shared by every tree grown on the same matrix.
class SortedColumns {
 public:
  explicit SortedColumns(const Matrix& x);

  const std::vector<std::uint32_t>& order(std::size_t feature) const { return orders_[feature]; }
  std::size_t features() const noexcept { return orders_.size(); }

 private:
  std::vector<std::vector<std::uint32_t>> orders_;
};

struct ClassificationTreeOptions {
  /// 0 = unlimited.
  std::size_t max_depth = 0;
  /// Minimum total sample weight in each child.
  double min_leaf = 1.0;
  /// Candidate features drawn per node; 0 = all. When none of the drawn
  /// features admits a split, the remaining ones are tried in draw order.
  std::size_t features_per_split = 0;
};

/// Gini-impurity CART on weighted rows (weight 0 = not in the sample; integer
/// weights express bootstrap multiplicity). Thresholds are midpoints between
/// consecutive distinct values; ties in gain go to the lower feature index,
/// then the lower threshold.
Tree grow_classification_tree(const Matrix& x, std::span<const int> y,
                              std::span<const double> weights,
                              const ClassificationTreeOptions& options, std::uint64_t seed,
                              const SortedColumns* presorted = nullptr);

struct BoostingTreeOptions {
  std::size_t max_depth = 6;
  double lambda = 1.0;
  double gamma = 0.0;
  /// Minimum hessian sum in each child.
  double min_child_weight = 1.0;
};

/// Regression tree for one boosting round: exact greedy search of the
/// second-order gain 1/2 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)] - gamma,
/// leaves w = -G/(H+lambda).
Tree grow_boosting_tree(const Matrix& x, std::span<const double> gradients,
                        std::span<const double> hessians, const BoostingTreeOptions& options,
                        const SortedColumns* presorted = nullptr);

}  // namespace hybridrisk::learners
