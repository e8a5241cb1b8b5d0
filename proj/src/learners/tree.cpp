#include "hybridrisk/learners/tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>

namespace hybridrisk::learners {

namespace {

constexpr std::int32_t kNoFeature = -1;

struct GiniStats {
  double w0 = 0.0;
  double w1 = 0.0;
  double total() const { return w0 + w1; }
};

// Weighted two-class Gini; gain is the decrease of W * impurity.
struct GiniCriterion {
  using Stats = GiniStats;

  std::span<const int> y;
  std::span<const double> w;
  double min_leaf;

  void add(Stats& s, std::uint32_t row) const {
    (y[row] == 1 ? s.w1 : s.w0) += w[row];
  }
  static Stats minus(const Stats& a, const Stats& b) { return {a.w0 - b.w0, a.w1 - b.w1}; }
  bool child_ok(const Stats& s) const { return s.total() >= min_leaf; }
  bool splittable(const Stats& s) const {
    return s.w0 > 0.0 && s.w1 > 0.0 && s.total() >= 2.0 * min_leaf;
  }
  static double score(const Stats& s) {
    const double t = s.total();
    return t > 0.0 ? (s.w0 * s.w0 + s.w1 * s.w1) / t : 0.0;
  }
  double gain(const Stats& left, const Stats& right, const Stats& total) const {
    return score(left) + score(right) - score(total);
  }
  // Any valid split of an impure node is taken (zero-gain splits included),
  // so fully grown trees keep refining XOR-like structure.
  bool accept(double gain) const { return gain > -1e-12; }
  static double leaf_value(const Stats& s) { return s.total() > 0.0 ? s.w1 / s.total() : 0.0; }
};

struct NewtonStats {
  double g = 0.0;
  double h = 0.0;
};

struct NewtonCriterion {
  using Stats = NewtonStats;

  std::span<const double> grad;
  std::span<const double> hess;
  double lambda;
  double gamma;
  double min_child_weight;

  void add(Stats& s, std::uint32_t row) const {
    s.g += grad[row];
    s.h += hess[row];
  }
  static Stats minus(const Stats& a, const Stats& b) { return {a.g - b.g, a.h - b.h}; }
  bool child_ok(const Stats& s) const { return s.h >= min_child_weight; }
  bool splittable(const Stats& s) const { return s.h >= 2.0 * min_child_weight; }
  double score(const Stats& s) const { return s.g * s.g / (s.h + lambda); }
  double gain(const Stats& left, const Stats& right, const Stats& total) const {
    return 0.5 * (score(left) + score(right) - score(total)) - gamma;
  }
  bool accept(double gain) const { return gain > 1e-6; }
  double leaf_value(const Stats& s) const { return -s.g / (s.h + lambda); }
};

template <typename Criterion>
class TreeBuilder {
 public:
  using Stats = typename Criterion::Stats;

  TreeBuilder(const Matrix& x, const Criterion& criterion, const SortedColumns& sorted,
              std::span<const char> active)
      : x_(x), criterion_(criterion), goes_left_(x.rows(), 0) {
    orders_.resize(x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
      auto& order = orders_[f];
      order.reserve(sorted.order(f).size());
      for (std::uint32_t row : sorted.order(f)) {
        if (active[row]) {
          order.push_back(row);
        }
      }
    }
    buffer_.resize(orders_.empty() ? 0 : orders_[0].size());
  }

  /// candidates(rng_state) yields the feature evaluation order for a node and
  /// how many must be tried before stopping at the first valid split.
  template <typename FeaturePlan>
  Tree build(std::size_t max_depth, bool depth_zero_is_unlimited, FeaturePlan&& plan) {
    nodes_.clear();
    nodes_.push_back({});
    if (orders_.empty() || orders_[0].empty()) {
      return Tree(nodes_);
    }
    struct Pending {
      std::int32_t node;
      std::size_t begin;
      std::size_t end;
      std::size_t depth;
    };
    std::vector<Pending> stack{{0, 0, orders_[0].size(), 0}};
    while (!stack.empty()) {
      const Pending cur = stack.back();
      stack.pop_back();

      Stats total{};
      for (std::size_t k = cur.begin; k < cur.end; ++k) {
        criterion_.add(total, orders_[0][k]);
      }
      nodes_[cur.node].value = criterion_.leaf_value(total);

      const bool depth_exhausted =
          depth_zero_is_unlimited ? (max_depth > 0 && cur.depth >= max_depth)
                                  : cur.depth >= max_depth;
      if (depth_exhausted || !criterion_.splittable(total)) {
        continue;
      }

      const auto [features, required] = plan();
      Split best;
      for (std::size_t idx = 0; idx < features.size(); ++idx) {
        if (idx >= required && best.feature != kNoFeature) {
          break;
        }
        evaluate(features[idx], cur.begin, cur.end, total, best);
      }
      if (best.feature == kNoFeature || !criterion_.accept(best.gain)) {
        continue;
      }

      const std::size_t left_count = partition(best, cur.begin, cur.end);
      const auto left = static_cast<std::int32_t>(nodes_.size());
      nodes_.push_back({});
      nodes_.push_back({});
      auto& node = nodes_[cur.node];
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.left = left;
      node.right = left + 1;
      const std::size_t mid = cur.begin + left_count;
      stack.push_back({left + 1, mid, cur.end, cur.depth + 1});
      stack.push_back({left, cur.begin, mid, cur.depth + 1});
    }
    return Tree(nodes_);
  }

 private:
  struct Split {
    std::int32_t feature = kNoFeature;
    double threshold = 0.0;
    double gain = -std::numeric_limits<double>::infinity();
  };

  void evaluate(std::size_t f, std::size_t begin, std::size_t end, const Stats& total,
                Split& best) const {
    const auto& order = orders_[f];
    Stats left{};
    for (std::size_t k = begin; k + 1 < end; ++k) {
      criterion_.add(left, order[k]);
      const double v = x_(order[k], f);
      const double next = x_(order[k + 1], f);
      if (!(next > v)) {
        continue;
      }
      const Stats right = Criterion::minus(total, left);
      if (!criterion_.child_ok(left) || !criterion_.child_ok(right)) {
        continue;
      }
      const double g = criterion_.gain(left, right, total);
      const auto feature = static_cast<std::int32_t>(f);
      if (g > best.gain || (g == best.gain && feature < best.feature)) {
        double threshold = v + (next - v) / 2.0;
        if (!(threshold < next)) {
          threshold = v;
        }
        best = {feature, threshold, g};
      }
    }
  }

  std::size_t partition(const Split& split, std::size_t begin, std::size_t end) {
    const auto f = static_cast<std::size_t>(split.feature);
    std::size_t left_count = 0;
    for (std::size_t k = begin; k < end; ++k) {
      const std::uint32_t row = orders_[f][k];
      const bool left = x_(row, f) <= split.threshold;
      goes_left_[row] = left ? 1 : 0;
      left_count += left ? 1 : 0;
    }
    for (auto& order : orders_) {
      std::size_t l = begin;
      std::size_t r = 0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::uint32_t row = order[k];
        if (goes_left_[row]) {
          order[l++] = row;
        } else {
          buffer_[r++] = row;
        }
      }
      std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(r),
                order.begin() + static_cast<std::ptrdiff_t>(l));
    }
    return left_count;
  }

  const Matrix& x_;
  const Criterion& criterion_;
  std::vector<std::vector<std::uint32_t>> orders_;
  std::vector<std::uint32_t> buffer_;
  std::vector<char> goes_left_;
  std::vector<TreeNode> nodes_;
};

void check_rows(const Matrix& x, std::size_t n, const char* what) {
  if (x.rows() != n) {
    throw Error(ErrorKind::dimension_mismatch,
                std::string(what) + " length differs from the number of feature rows");
  }
}

}  // namespace

double Tree::predict(std::span<const double> row) const {
  std::size_t idx = 0;
  while (!nodes_[idx].is_leaf()) {
    const auto& node = nodes_[idx];
    idx = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold
                                       ? node.left
                                       : node.right);
  }
  return nodes_[idx].value;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t Tree::depth() const {
  if (nodes_.empty()) {
    return 0;
  }
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

nlohmann::json Tree::to_json() const {
  std::vector<std::int32_t> feature, left, right;
  std::vector<double> threshold, value;
  for (const auto& n : nodes_) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature},
          {"threshold", threshold},
          {"left", left},
          {"right", right},
          {"value", value}};
}

Tree Tree::from_json(const nlohmann::json& j) {
  const auto feature = j.at("feature").get<std::vector<std::int32_t>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<std::int32_t>>();
  const auto right = j.at("right").get<std::vector<std::int32_t>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
      value.size() != n) {
    throw Error(ErrorKind::corrupt_file, "tree arrays have inconsistent lengths");
  }
  std::vector<TreeNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i]};
    if (feature[i] >= 0) {
      const auto ok = [&](std::int32_t c) {
        return c > static_cast<std::int32_t>(i) && c < static_cast<std::int32_t>(n);
      };
      if (!ok(left[i]) || !ok(right[i])) {
        throw Error(ErrorKind::corrupt_file, "tree child index out of range");
      }
    }
  }
  return Tree(std::move(nodes));
}

SortedColumns::SortedColumns(const Matrix& x) {
  orders_.resize(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& order = orders_[f];
    order.resize(x.rows());
    std::iota(order.begin(), order.end(), std::uint32_t{0});
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double va = x(a, f);
      const double vb = x(b, f);
      return va < vb || (va == vb && a < b);
    });
  }
}

Tree grow_classification_tree(const Matrix& x, std::span<const int> y,
                              std::span<const double> weights,
                              const ClassificationTreeOptions& options, std::uint64_t seed,
                              const SortedColumns* presorted) {
  check_rows(x, y.size(), "label");
  check_rows(x, weights.size(), "weight");
  std::optional<SortedColumns> local;
  if (presorted == nullptr) {
    local.emplace(x);
    presorted = &*local;
  }
  std::vector<char> active(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    active[i] = weights[i] > 0.0 ? 1 : 0;
  }
  const GiniCriterion criterion{y, weights, options.min_leaf};
  TreeBuilder<GiniCriterion> builder(x, criterion, *presorted, active);

  const std::size_t p = x.cols();
  const std::size_t mtry =
      options.features_per_split == 0 ? p : std::min(options.features_per_split, p);
  Rng rng(seed);
  std::vector<std::size_t> features(p);
  auto plan = [&]() {
    std::iota(features.begin(), features.end(), std::size_t{0});
    if (mtry < p) {
      rng.shuffle(features);
    }
    return std::pair<const std::vector<std::size_t>&, std::size_t>(features, mtry);
  };
  return builder.build(options.max_depth, true, plan);
}

Tree grow_boosting_tree(const Matrix& x, std::span<const double> gradients,
                        std::span<const double> hessians, const BoostingTreeOptions& options,
                        const SortedColumns* presorted) {
  check_rows(x, gradients.size(), "gradient");
  check_rows(x, hessians.size(), "hessian");
  std::optional<SortedColumns> local;
  if (presorted == nullptr) {
    local.emplace(x);
    presorted = &*local;
  }
  const std::vector<char> active(x.rows(), 1);
  const NewtonCriterion criterion{gradients, hessians, options.lambda, options.gamma,
                                  options.min_child_weight};
  TreeBuilder<NewtonCriterion> builder(x, criterion, *presorted, active);
  std::vector<std::size_t> features(x.cols());
  std::iota(features.begin(), features.end(), std::size_t{0});
  auto plan = [&]() {
    return std::pair<const std::vector<std::size_t>&, std::size_t>(features, features.size());
  };
  return builder.build(options.max_depth, false, plan);
}

}  // namespace hybridrisk::learners
