#pragma once

#include <functional>
#include <string>
#include <vector>

#include "genrl/common.hpp"

namespace genrl {

/// What a guard looks at when routing a task instance.
enum class GuardFeatures {
  TaskIndex,  ///< the single feature i
  InitMean,   ///< mean of the instance's initial distribution
};

/// Binary threshold tree. Node 0 is the root; a test sends x to `left` when
/// x[feature] <= threshold.
struct DecisionTree {
  struct Node {
    bool leaf = true;
    std::size_t label = 0;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0, right = 0;
  };
  std::vector<Node> nodes;

  std::size_t predict(std::span<const double> x) const;
  std::size_t depth() const;
  /// Labels appearing at leaves.
  std::vector<std::size_t> labels() const;
};

/// CART with Gini impurity and midpoint thresholds. Ties prefer the lowest
/// feature, then the smallest threshold; leaf labels break ties toward the
/// smallest label. Splits continue while they reduce impurity.
DecisionTree train_decision_tree(const std::vector<Vec>& x, const std::vector<std::size_t>& y,
                                 std::size_t max_depth = 4);

/// Nested conditional, e.g. `i <= 4 ? e1 : e2`. With `integer_feature` the
/// threshold is printed as floor(threshold), which is exact for integer inputs.
std::string tree_expression(const DecisionTree& tree,
                            const std::function<std::string(std::size_t)>& feature_name,
                            const std::function<std::string(std::size_t)>& label_name,
                            bool integer_feature);

}  // namespace genrl
