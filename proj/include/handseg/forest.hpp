#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "handseg/grid.hpp"
#include "handseg/imaging.hpp"

namespace handseg {

struct PixelSample {
  LabPixel feature;
  bool skin = false;
};

struct ForestParams {
  int n_trees = 10;
  int max_depth = 12;
  int min_leaf_samples = 5;
  /// Fraction of the training set each tree sees, drawn without replacement.
  double bootstrap_fraction = 0.8;
  /// Candidate LAB dimensions examined at each split (1..3).
  int features_per_split = 2;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// Flattened tree node. Leaves have feature == -1; internal nodes send
/// value <= threshold to `left`, the rest to `right`.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double probability = 0.0;  // skin fraction of routed training samples

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const LabPixel& p) const;
  int depth() const;
  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

/// Binary random forest over LAB pixel values. Immutable once trained.
class Forest {
 public:
  Forest() = default;
  Forest(ForestParams params, std::vector<DecisionTree> trees);

  const ForestParams& params() const { return params_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  /// Mean leaf probability over the trees.
  double predict(const LabPixel& p) const;

  friend bool operator==(const Forest&, const Forest&) = default;

 private:
  ForestParams params_;
  std::vector<DecisionTree> trees_;
};

/// Trains a forest. Throws DataError("degenerate training data") unless both
/// classes are present.
Forest train_forest(std::span<const PixelSample> samples,
                    const ForestParams& params);

/// Per-pixel skin probability for a frame.
ProbabilityMap predict_map(const Forest& forest, const Frame& frame);
ProbabilityMap predict_map(const Forest& forest, const LabImage& lab);

}  // namespace handseg
