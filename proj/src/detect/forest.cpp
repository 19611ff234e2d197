#include "probekit/detect/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "probekit/core/error.hpp"

namespace probekit::detect {

void ForestConfig::validate() const {
  if (n_trees < 1) throw ValidationError("forest needs at least one tree");
}

std::size_t ForestConfig::resolved_features_per_split(std::size_t n_features) const {
  if (features_per_split != 0) return std::min(features_per_split, n_features);
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));
}

Json forest_config_to_json(const ForestConfig& cfg) {
  Json j = Json::object();
  j["n_trees"] = cfg.n_trees;
  j["max_depth"] = cfg.max_depth;
  j["min_samples_leaf"] = cfg.min_samples_leaf;
  j["features_per_split"] = cfg.features_per_split;
  j["seed"] = cfg.seed;
  return j;
}

ForestConfig forest_config_from_json(const Json& j) {
  ForestConfig cfg;
  cfg.n_trees = j.value("n_trees", cfg.n_trees);
  cfg.max_depth = j.value("max_depth", cfg.max_depth);
  cfg.min_samples_leaf = j.value("min_samples_leaf", cfg.min_samples_leaf);
  cfg.features_per_split = j.value("features_per_split", cfg.features_per_split);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

std::vector<std::size_t> bootstrap_sample(std::size_t n, Rng& rng) {
  std::vector<std::size_t> out(n);
  for (auto& s : out) s = static_cast<std::size_t>(rng.below(n));
  return out;
}

Forest fit_forest(MatrixView X, std::span<const std::size_t> y, std::size_t n_classes, const ForestConfig& cfg) {
  cfg.validate();
  if (X.rows < 2 || y.size() != X.rows) throw ValidationError("fit_forest: need at least two labelled rows");
  const std::set<std::size_t> distinct(y.begin(), y.end());
  if (distinct.size() < 2) throw ValidationError("fit_forest: training labels contain a single class");

  Forest forest;
  forest.n_classes = n_classes;
  forest.n_features = X.cols;
  forest.config = cfg;
  forest.trees.resize(cfg.n_trees);
  forest.in_bag.assign(cfg.n_trees, std::vector<std::size_t>(X.rows, 0));

  const TreeConfig tree_cfg{cfg.max_depth, cfg.min_samples_leaf, cfg.resolved_features_per_split(X.cols)};
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < cfg.n_trees; t = next++) {
      Rng rng(derive_seed(cfg.seed, t));
      const auto sample = bootstrap_sample(X.rows, rng);
      for (auto s : sample) ++forest.in_bag[t][s];
      forest.trees[t] = fit_tree(X, y, n_classes, sample, tree_cfg, rng);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(cfg.workers, 1, cfg.n_trees);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  return forest;
}

namespace {

void add_leaf_votes(const Tree& tree, std::span<const double> x, std::vector<double>& votes) {
  const auto& counts = tree.leaf_for(x).counts;
  std::size_t n = 0;
  for (auto c : counts) n += c;
  for (std::size_t k = 0; k < counts.size(); ++k) votes[k] += static_cast<double>(counts[k]) / static_cast<double>(n);
}

}  // namespace

ProbabilityVector forest_predict_proba(const Forest& forest, std::span<const double> x) {
  if (x.size() != forest.n_features) {
    throw ValidationError("feature row has width " + std::to_string(x.size()) + ", forest expects " +
                          std::to_string(forest.n_features));
  }
  std::vector<double> votes(forest.n_classes, 0.0);
  for (const auto& tree : forest.trees) add_leaf_votes(tree, x, votes);
  for (double& v : votes) v /= static_cast<double>(forest.trees.size());
  return ProbabilityVector::validated(std::move(votes), 1e-9);
}

std::size_t argmax_label(std::span<const double> votes) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < votes.size(); ++k) {
    if (votes[k] > votes[best]) best = k;
  }
  return best;
}

std::size_t forest_predict(const Forest& forest, std::span<const double> x) {
  return argmax_label(forest_predict_proba(forest, x).values());
}

double oob_accuracy(const Forest& forest, MatrixView X, std::span<const std::size_t> y) {
  if (forest.in_bag.size() != forest.trees.size()) {
    throw ValidationError("oob_accuracy: forest carries no bootstrap bookkeeping");
  }
  std::size_t scored = 0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < X.rows; ++r) {
    std::vector<double> votes(forest.n_classes, 0.0);
    std::size_t used = 0;
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      if (forest.in_bag[t][r] != 0) continue;
      add_leaf_votes(forest.trees[t], X.row(r), votes);
      ++used;
    }
    if (used == 0) continue;
    ++scored;
    correct += argmax_label(votes) == y[r];
  }
  return scored == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(scored);
}

Json forest_to_json(const Forest& forest) {
  Json j = Json::object();
  j["n_classes"] = forest.n_classes;
  j["n_features"] = forest.n_features;
  j["config"] = forest_config_to_json(forest.config);
  Json trees = Json::array();
  for (const auto& t : forest.trees) trees.push_back(tree_to_json(t));
  j["trees"] = std::move(trees);
  return j;
}

Forest forest_from_json(const Json& j) {
  Forest forest;
  try {
    forest.n_classes = j.at("n_classes").get<std::size_t>();
    forest.n_features = j.at("n_features").get<std::size_t>();
    forest.config = forest_config_from_json(j.at("config"));
    for (const auto& t : j.at("trees")) forest.trees.push_back(tree_from_json(t, forest.n_classes, forest.n_features));
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad forest document: ") + e.what());
  }
  if (forest.trees.empty()) throw ValidationError("forest document has no trees");
  return forest;
}

}  // namespace probekit::detect
