#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "becaptcha/errors.hpp"
#include "becaptcha/matrix.hpp"
#include "becaptcha/rng.hpp"

namespace becaptcha {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double bot_fraction = 0.0;  // leaf payload

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  double leaf_bot_fraction(const Vec& x) const {
    int i = 0;
    while (!nodes[i].is_leaf())
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].bot_fraction;
  }

  bool votes_bot(const Vec& x) const { return leaf_bot_fraction(x) >= 0.5; }
};

struct ForestConfig {
  std::size_t n_trees = 100;
  int max_depth = -1;  // -1 = grow until pure
  std::size_t min_samples_split = 2;
  std::uint64_t seed = 1;
};

namespace forest_detail {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();
};

// Weighted Gini of the best threshold on one feature over the node samples.
inline void best_split_on_feature(const std::vector<Vec>& x, const std::vector<int>& y,
                                  const std::vector<std::size_t>& idx, int feature,
                                  SplitChoice& best) {
  std::vector<std::pair<double, int>> vals;
  vals.reserve(idx.size());
  for (std::size_t i : idx) vals.emplace_back(x[i][feature], y[i]);
  std::sort(vals.begin(), vals.end());

  const std::size_t n = vals.size();
  std::size_t total_bot = 0;
  for (const auto& [v, lab] : vals) total_bot += lab;

  std::size_t left_n = 0, left_bot = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    ++left_n;
    left_bot += vals[i].second;
    if (vals[i].first == vals[i + 1].first) continue;  // not a boundary
    const std::size_t right_n = n - left_n;
    const std::size_t right_bot = total_bot - left_bot;
    const double pl = static_cast<double>(left_bot) / left_n;
    const double pr = static_cast<double>(right_bot) / right_n;
    const double gini = (left_n * 2.0 * pl * (1.0 - pl) + right_n * 2.0 * pr * (1.0 - pr)) / n;
    if (gini < best.impurity) {
      best.impurity = gini;
      best.feature = feature;
      best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
    }
  }
}

inline int build_tree(DecisionTree& tree, const std::vector<Vec>& x, const std::vector<int>& y,
                      std::vector<std::size_t> idx, int depth, const ForestConfig& cfg,
                      std::size_t mtry, Rng& rng) {
  std::size_t bots = 0;
  for (std::size_t i : idx) bots += y[i];
  const double frac = static_cast<double>(bots) / idx.size();

  const bool pure = bots == 0 || bots == idx.size();
  const bool depth_capped = cfg.max_depth >= 0 && depth >= cfg.max_depth;
  if (pure || depth_capped || idx.size() < cfg.min_samples_split) {
    tree.nodes.push_back({-1, 0.0, -1, -1, frac});
    return static_cast<int>(tree.nodes.size() - 1);
  }

  // walk a random permutation of the features; inspect mtry of them, and keep
  // going past mtry until some feature yields a valid split
  const std::size_t dim = x.front().size();
  std::vector<int> features(dim);
  std::iota(features.begin(), features.end(), 0);
  for (std::size_t i = 0; i + 1 < dim; ++i)
    std::swap(features[i], features[i + rng.uniform_index(dim - i)]);

  SplitChoice best;
  std::size_t inspected = 0;
  for (int f : features) {
    if (inspected >= mtry && best.feature >= 0) break;
    best_split_on_feature(x, y, idx, f, best);
    ++inspected;
  }
  if (best.feature < 0) {  // every feature is constant on this node
    tree.nodes.push_back({-1, 0.0, -1, -1, frac});
    return static_cast<int>(tree.nodes.size() - 1);
  }

  std::vector<std::size_t> left_idx, right_idx;
  for (std::size_t i : idx)
    (x[i][best.feature] <= best.threshold ? left_idx : right_idx).push_back(i);
  idx.clear();
  idx.shrink_to_fit();

  const int node = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({best.feature, best.threshold, -1, -1, frac});
  tree.nodes[node].left = build_tree(tree, x, y, std::move(left_idx), depth + 1, cfg, mtry, rng);
  tree.nodes[node].right = build_tree(tree, x, y, std::move(right_idx), depth + 1, cfg, mtry, rng);
  return node;
}

}  // namespace forest_detail

// Bagged Gini trees with sqrt(dim) feature subsampling per split. Per-tree
// streams derive from the root seed, so a forest is reproducible regardless
// of training order.
class RandomForest {
 public:
  std::vector<DecisionTree> trees;

  static RandomForest train(const std::vector<Vec>& x, const std::vector<int>& y,
                            const ForestConfig& cfg) {
    if (x.empty()) throw Error(ErrorKind::EmptyTrainingSet, "forest needs training points");
    RandomForest forest;
    forest.trees.resize(cfg.n_trees);
    const std::size_t n = x.size();
    const std::size_t dim = x.front().size();
    const std::size_t mtry =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(dim))));
    Rng root(cfg.seed);
    for (std::size_t t = 0; t < cfg.n_trees; ++t) {
      Rng rng = root.child(t);
      std::vector<std::size_t> boot(n);
      for (auto& i : boot) i = rng.uniform_index(n);
      forest_detail::build_tree(forest.trees[t], x, y, std::move(boot), 0, cfg, mtry, rng);
    }
    return forest;
  }

  // Fraction of trees voting bot.
  double predict_bot_score(const Vec& x) const {
    std::size_t votes = 0;
    for (const auto& t : trees) votes += t.votes_bot(x) ? 1 : 0;
    return static_cast<double>(votes) / static_cast<double>(trees.size());
  }
};

inline nlohmann::json forest_to_json(const RandomForest& f) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : f.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.bot_fraction});
    trees.push_back(nodes);
  }
  return trees;
}

inline RandomForest forest_from_json(const nlohmann::json& j) {
  RandomForest f;
  for (const auto& jt : j) {
    DecisionTree t;
    for (const auto& jn : jt)
      t.nodes.push_back({jn[0].get<int>(), jn[1].get<double>(), jn[2].get<int>(),
                         jn[3].get<int>(), jn[4].get<double>()});
    f.trees.push_back(std::move(t));
  }
  return f;
}

}  // namespace becaptcha
