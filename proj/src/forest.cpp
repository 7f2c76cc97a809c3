#include "handseg/forest.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "handseg/error.hpp"

namespace handseg {

namespace {

double component(const LabPixel& p, int f) {
  return f == 0 ? p.l : (f == 1 ? p.a : p.b);
}

// 2 * n * p * (1 - p): Gini impurity scaled by node size.
double weighted_gini(double skin, double n) {
  return n > 0 ? 2.0 * skin * (n - skin) / n : 0.0;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const PixelSample> samples, const ForestParams& params,
              std::mt19937_64& rng)
      : samples_(samples), params_(params), rng_(rng) {}

  DecisionTree build(std::vector<std::uint32_t> indices) {
    DecisionTree tree;
    nodes_ = &tree.nodes;
    grow(indices, 0);
    return tree;
  }

 private:
  std::int32_t grow(std::span<std::uint32_t> idx, int depth) {
    const auto node_id = static_cast<std::int32_t>(nodes_->size());
    nodes_->emplace_back();
    const double n = static_cast<double>(idx.size());
    double skin = 0;
    for (auto i : idx) skin += samples_[i].skin ? 1 : 0;
    (*nodes_)[node_id].probability = n > 0 ? skin / n : 0.0;

    if (depth >= params_.max_depth ||
        idx.size() < 2 * static_cast<std::size_t>(params_.min_leaf_samples) ||
        skin == 0 || skin == n)
      return node_id;

    const Split best = find_split(idx, weighted_gini(skin, n));
    if (best.feature < 0) return node_id;

    auto mid = std::partition(idx.begin(), idx.end(), [&](std::uint32_t i) {
      return component(samples_[i].feature, best.feature) <= best.threshold;
    });
    const auto split_at = static_cast<std::size_t>(mid - idx.begin());
    const std::int32_t l = grow(idx.subspan(0, split_at), depth + 1);
    const std::int32_t r = grow(idx.subspan(split_at), depth + 1);
    TreeNode& node = (*nodes_)[node_id];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return node_id;
  }

  Split find_split(std::span<const std::uint32_t> idx, double parent) {
    std::array<int, 3> features = {0, 1, 2};
    for (int i = 2; i > 0; --i)
      std::swap(features[i], features[rng_() % static_cast<unsigned>(i + 1)]);

    Split best;
    best.impurity = parent;
    const std::size_t n = idx.size();
    const auto min_leaf = static_cast<std::size_t>(params_.min_leaf_samples);
    double total_skin = 0;
    for (auto i : idx) total_skin += samples_[i].skin ? 1 : 0;

    for (int k = 0; k < params_.features_per_split; ++k) {
      const int f = features[k];
      column_.resize(n);
      for (std::size_t j = 0; j < n; ++j) {
        const PixelSample& s = samples_[idx[j]];
        column_[j] = {component(s.feature, f), s.skin};
      }
      std::sort(column_.begin(), column_.end(), [](const auto& a, const auto& b) {
        return a.first < b.first || (a.first == b.first && a.second < b.second);
      });
      double left_skin = 0;
      for (std::size_t j = 0; j + 1 < n; ++j) {
        left_skin += column_[j].second ? 1 : 0;
        const std::size_t nl = j + 1;
        if (nl < min_leaf || n - nl < min_leaf) continue;
        const double lo = column_[j].first, hi = column_[j + 1].first;
        if (!(lo < hi)) continue;
        const double imp =
            weighted_gini(left_skin, static_cast<double>(nl)) +
            weighted_gini(total_skin - left_skin, static_cast<double>(n - nl));
        if (imp < best.impurity) {
          double t = lo + (hi - lo) / 2.0;
          if (!(t < hi)) t = lo;
          best = {f, t, imp};
        }
      }
    }
    return best;
  }

  std::span<const PixelSample> samples_;
  const ForestParams& params_;
  std::mt19937_64& rng_;
  std::vector<TreeNode>* nodes_ = nullptr;
  std::vector<std::pair<double, bool>> column_;
};

}  // namespace

void ForestParams::validate() const {
  if (n_trees < 1) throw ParamError("n_trees must be >= 1");
  if (max_depth < 0) throw ParamError("max_depth must be >= 0");
  if (min_leaf_samples < 1) throw ParamError("min_leaf_samples must be >= 1");
  if (!(bootstrap_fraction > 0.0 && bootstrap_fraction <= 1.0))
    throw ParamError("bootstrap_fraction must be in (0, 1]");
  if (features_per_split < 1 || features_per_split > 3)
    throw ParamError("features_per_split must be in 1..3");
}

double DecisionTree::predict(const LabPixel& p) const {
  std::int32_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = component(p, n.feature) <= n.threshold ? n.left : n.right;
  }
  return nodes[i].probability;
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  int deepest = 0;
  std::vector<std::pair<std::int32_t, int>> stack = {{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.push_back({nodes[i].left, d + 1});
      stack.push_back({nodes[i].right, d + 1});
    }
  }
  return deepest;
}

Forest::Forest(ForestParams params, std::vector<DecisionTree> trees)
    : params_(params), trees_(std::move(trees)) {
  if (trees_.empty()) throw DataError("forest has no trees");
}

double Forest::predict(const LabPixel& p) const {
  double s = 0.0;
  for (const DecisionTree& t : trees_) s += t.predict(p);
  return s / static_cast<double>(trees_.size());
}

Forest train_forest(std::span<const PixelSample> samples,
                    const ForestParams& params) {
  params.validate();
  if (samples.size() > std::numeric_limits<std::uint32_t>::max())
    throw DataError("too many training samples");
  const auto skin = std::count_if(samples.begin(), samples.end(),
                                  [](const PixelSample& s) { return s.skin; });
  if (skin == 0 || skin == static_cast<std::ptrdiff_t>(samples.size()))
    throw DataError("degenerate training data");

  const std::size_t n = samples.size();
  const std::size_t subset = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(params.bootstrap_fraction * n)));

  std::vector<DecisionTree> trees;
  trees.reserve(params.n_trees);
  for (int t = 0; t < params.n_trees; ++t) {
    // Each tree owns its stream, so trees are independent of build order.
    std::seed_seq seq{static_cast<std::uint32_t>(params.seed),
                      static_cast<std::uint32_t>(params.seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::size_t i = 0; i < subset && i + 1 < n; ++i)
      std::swap(idx[i], idx[i + rng() % (n - i)]);
    idx.resize(subset);
    TreeBuilder builder(samples, params, rng);
    trees.push_back(builder.build(std::move(idx)));
  }
  return Forest(params, std::move(trees));
}

ProbabilityMap predict_map(const Forest& forest, const LabImage& lab) {
  ProbabilityMap out(lab.width, lab.height);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = forest.predict(lab.at(i));
  return out;
}

ProbabilityMap predict_map(const Forest& forest, const Frame& frame) {
  return predict_map(forest, to_lab(frame));
}

}  // namespace handseg
