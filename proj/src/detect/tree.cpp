#include "probekit/detect/tree.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

#include "probekit/core/error.hpp"

namespace probekit::detect {

double gini(std::span<const std::size_t> counts) {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  if (n == 0) throw ValidationError("gini: all counts are zero");
  double sum_sq = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

namespace {

// Gini without the emptiness check, for the inner sweep.
double gini_of(const std::vector<std::size_t>& counts, std::size_t n) {
  double sum_sq = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

}  // namespace

std::optional<Split> best_split(MatrixView X, std::span<const std::size_t> y, std::size_t n_classes,
                                std::span<const std::size_t> samples, std::span<const std::size_t> features,
                                std::size_t min_samples_leaf) {
  const std::size_t n = samples.size();
  if (n < 2 || features.empty()) return std::nullopt;
  const std::size_t min_leaf = std::max<std::size_t>(1, min_samples_leaf);

  std::vector<std::size_t> parent(n_classes, 0);
  for (auto s : samples) ++parent[y[s]];
  const double parent_gini = gini_of(parent, n);
  std::uint64_t parent_sq = 0;
  for (auto c : parent) parent_sq += static_cast<std::uint64_t>(c) * c;
  if (parent_gini <= 0.0) return std::nullopt;

  std::vector<std::size_t> sorted_features(features.begin(), features.end());
  std::sort(sorted_features.begin(), sorted_features.end());

  std::optional<Split> best;
  // (value, position in samples): sorting these pairs orders ties by
  // position, the same order a stable sort of `samples` would give.
  std::vector<std::pair<double, std::size_t>> order(n);
  std::vector<std::size_t> left(n_classes), right(n_classes);
  for (std::size_t f : sorted_features) {
    bool constant = true;
    for (std::size_t i = 0; i < n; ++i) {
      order[i] = {X.at(samples[i], f), i};
      constant = constant && order[i].first == order[0].first;
    }
    if (constant) continue;
    std::sort(order.begin(), order.end());
    std::fill(left.begin(), left.end(), 0);
    right = parent;
    // Sums of squared class counts, updated as one row moves left.
    std::uint64_t sq_left = 0;
    std::uint64_t sq_right = parent_sq;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t label = y[samples[order[i].second]];
      sq_left += 2 * left[label] + 1;
      sq_right -= 2 * right[label] - 1;
      ++left[label];
      --right[label];
      const double lo = order[i].first;
      const double hi = order[i + 1].first;
      if (!(lo < hi)) continue;
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      // n_l * gini_l + n_r * gini_r = n - sq_l / n_l - sq_r / n_r
      const double weighted = (static_cast<double>(n) - static_cast<double>(sq_left) / static_cast<double>(n_left) -
                               static_cast<double>(sq_right) / static_cast<double>(n_right)) /
                              static_cast<double>(n);
      const double decrease = parent_gini - weighted;
      if (decrease <= kSplitTieEpsilon) continue;
      double threshold = lo + (hi - lo) / 2.0;
      if (!(threshold < hi)) threshold = lo;
      // Features are visited in ascending order and thresholds ascend within a
      // feature, so only a strictly better decrease displaces the incumbent.
      if (!best || decrease > best->impurity_decrease + kSplitTieEpsilon) {
        best = Split{f, threshold, decrease};
      }
    }
  }
  return best;
}

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf()) {
    node = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                                         : node->right)];
  }
  return *node;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t out = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
    d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    out = std::max(out, d[i] + 1);
  }
  return out;
}

namespace {

struct TreeBuilder {
  MatrixView X;
  std::span<const std::size_t> y;
  std::size_t n_classes;
  const TreeConfig& cfg;
  Rng& rng;
  Tree& tree;
  std::vector<std::size_t> all_features;

  int make_leaf(std::span<const std::size_t> samples) {
    TreeNode leaf;
    leaf.counts.assign(n_classes, 0);
    for (auto s : samples) ++leaf.counts[y[s]];
    tree.nodes.push_back(std::move(leaf));
    return static_cast<int>(tree.nodes.size() - 1);
  }

  std::vector<std::size_t> draw_features() {
    const std::size_t d = all_features.size();
    const std::size_t k = cfg.features_per_split;
    if (k == 0 || k >= d) return all_features;
    std::vector<std::size_t> pool = all_features;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(d - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

  int build(std::vector<std::size_t> samples, std::size_t depth) {
    bool pure = true;
    for (auto s : samples) pure = pure && y[s] == y[samples.front()];
    const std::size_t min_leaf = std::max<std::size_t>(1, cfg.min_samples_leaf);
    if (pure || (cfg.max_depth != 0 && depth >= cfg.max_depth) || samples.size() < 2 * min_leaf) {
      return make_leaf(samples);
    }
    const auto features = draw_features();
    const auto split = best_split(X, y, n_classes, samples, features, cfg.min_samples_leaf);
    if (!split) return make_leaf(samples);

    std::vector<std::size_t> left, right;
    for (auto s : samples) (X.at(s, split->feature) <= split->threshold ? left : right).push_back(s);
    const int self = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{static_cast<int>(split->feature), split->threshold, -1, -1, {}});
    const int l = build(std::move(left), depth + 1);
    tree.nodes[static_cast<std::size_t>(self)].left = l;
    const int r = build(std::move(right), depth + 1);
    tree.nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }
};

}  // namespace

Tree fit_tree(MatrixView X, std::span<const std::size_t> y, std::size_t n_classes,
              std::span<const std::size_t> samples, const TreeConfig& cfg, Rng& rng) {
  if (samples.empty()) throw ValidationError("fit_tree: no samples");
  if (X.cols == 0) throw ValidationError("fit_tree: no features");
  for (auto s : samples) {
    if (s >= X.rows || y[s] >= n_classes) throw ValidationError("fit_tree: sample index or label out of range");
  }
  Tree tree;
  tree.n_classes = n_classes;
  tree.n_features = X.cols;
  tree.config = cfg;
  std::vector<std::size_t> all(X.cols);
  std::iota(all.begin(), all.end(), 0);
  TreeBuilder builder{X, y, n_classes, cfg, rng, tree, std::move(all)};
  builder.build(std::vector<std::size_t>(samples.begin(), samples.end()), 0);
  return tree;
}

Json tree_to_json(const Tree& tree) {
  Json nodes = Json::array();
  for (const auto& n : tree.nodes) {
    Json e = Json::object();
    if (n.is_leaf()) {
      e["counts"] = n.counts;
    } else {
      e["feature"] = n.feature;
      e["threshold"] = n.threshold;
      e["left"] = n.left;
      e["right"] = n.right;
    }
    nodes.push_back(std::move(e));
  }
  Json j = Json::object();
  j["nodes"] = std::move(nodes);
  return j;
}

Tree tree_from_json(const Json& j, std::size_t n_classes, std::size_t n_features) {
  Tree tree;
  tree.n_classes = n_classes;
  tree.n_features = n_features;
  try {
    for (const auto& e : j.at("nodes")) {
      TreeNode n;
      if (e.contains("counts")) {
        n.counts = e.at("counts").get<std::vector<std::size_t>>();
        if (n.counts.size() != n_classes) throw ValidationError("tree leaf has the wrong class count");
        if (std::accumulate(n.counts.begin(), n.counts.end(), std::size_t{0}) == 0) {
          throw ValidationError("tree leaf with no samples");
        }
      } else {
        n.feature = e.at("feature").get<int>();
        n.threshold = e.at("threshold").get<double>();
        n.left = e.at("left").get<int>();
        n.right = e.at("right").get<int>();
      }
      tree.nodes.push_back(std::move(n));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad tree document: ") + e.what());
  }
  const auto n_nodes = static_cast<int>(tree.nodes.size());
  if (n_nodes == 0) throw ValidationError("tree has no nodes");
  for (int i = 0; i < n_nodes; ++i) {
    const auto& n = tree.nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) continue;
    // Preorder layout: children always follow their parent, so no cycles.
    if (n.feature >= static_cast<int>(n_features) || n.left <= i || n.right <= i || n.left >= n_nodes ||
        n.right >= n_nodes) {
      throw ValidationError("tree node references out of range");
    }
  }
  return tree;
}

}  // namespace probekit::detect
