#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "probekit/core/json_io.hpp"
#include "probekit/core/types.hpp"
#include "probekit/detect/tree.hpp"

namespace probekit::detect {

// Defaults follow the conventional random forest: 100 Gini trees on
// bootstrap samples of size n, sqrt(d) features per split, grown to purity.
struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(d))
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const;
  std::size_t resolved_features_per_split(std::size_t n_features) const;
};

Json forest_config_to_json(const ForestConfig& cfg);
ForestConfig forest_config_from_json(const Json& j);

struct Forest {
  std::vector<Tree> trees;
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  ForestConfig config;
  // Per-tree multiplicity of each training row in its bootstrap. Kept for
  // out-of-bootstrap estimates; not serialized.
  std::vector<std::vector<std::size_t>> in_bag;
};

// n draws with replacement from [0, n).
std::vector<std::size_t> bootstrap_sample(std::size_t n, Rng& rng);

// Tree t uses Rng(derive_seed(cfg.seed, t)) for its bootstrap and then for its
// feature draws. Throws ValidationError for fewer than two rows or classes.
Forest fit_forest(MatrixView X, std::span<const std::size_t> y, std::size_t n_classes, const ForestConfig& cfg);

// Mean over trees of each leaf's normalized class counts.
ProbabilityVector forest_predict_proba(const Forest& forest, std::span<const double> x);
// argmax of the vote fractions; ties to the lowest class index.
std::size_t argmax_label(std::span<const double> votes);
std::size_t forest_predict(const Forest& forest, std::span<const double> x);

// Accuracy on each training row using only trees that did not draw it.
// Rows that every tree saw are skipped.
double oob_accuracy(const Forest& forest, MatrixView X, std::span<const std::size_t> y);

Json forest_to_json(const Forest& forest);
Forest forest_from_json(const Json& j);

}  // namespace probekit::detect
