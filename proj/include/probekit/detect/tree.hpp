#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "probekit/core/json_io.hpp"
#include "probekit/core/rng.hpp"

namespace probekit::detect {

// Dense row-major matrix view used by the tree learner.
struct MatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data + r * cols, cols}; }
};

// 1 - sum (c_i / n)^2. Throws ValidationError when every count is zero.
double gini(std::span<const std::size_t> counts);

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
};

// Decreases closer than this are ties.
inline constexpr double kSplitTieEpsilon = 1e-12;

// Exhaustive scan over midpoints between consecutive distinct values of every
// feature in `features`. Maximizes parent Gini minus the size-weighted child
// Gini; ties go to the lower feature index, then the lower threshold. None if
// no split strictly decreases impurity while leaving min_samples_leaf on
// both sides. `samples` may repeat indices (bootstrap).
std::optional<Split> best_split(MatrixView X, std::span<const std::size_t> y, std::size_t n_classes,
                                std::span<const std::size_t> samples, std::span<const std::size_t> features,
                                std::size_t min_samples_leaf = 1);

struct TreeConfig {
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t features_per_split = 0;  // 0 = all features
};

struct TreeNode {
  // Split nodes: feature >= 0, children indices set. Leaves: feature = -1.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<std::size_t> counts;  // leaves only

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root, preorder, left first
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  TreeConfig config;

  const TreeNode& leaf_for(std::span<const double> x) const;
  std::size_t depth() const;
  bool operator==(const Tree& o) const { return nodes == o.nodes && n_classes == o.n_classes; }
};

// Recursive Gini tree on rows `samples` of X. At each node draws
// features_per_split features without replacement from `rng` (no draw when
// all features are used), splits with best_split, and stops on purity, depth,
// or leaf size.
Tree fit_tree(MatrixView X, std::span<const std::size_t> y, std::size_t n_classes,
              std::span<const std::size_t> samples, const TreeConfig& cfg, Rng& rng);

Json tree_to_json(const Tree& tree);
Tree tree_from_json(const Json& j, std::size_t n_classes, std::size_t n_features);

}  // namespace probekit::detect
