#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "georf/dataset.hpp"
#include "georf/parallel.hpp"

namespace georf {

// Node of a binary classification tree, stored flat. feature < 0 marks a
// leaf. Every node keeps its class-1 fraction and sample count so that
// Gini importance can be recomputed from the stored tree alone.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double class1_fraction = 0.0;
  std::int32_t sample_count = 0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root; preorder layout
};

struct ForestParams {
  int b_trees = 100;
  int mtry = 0;      // features per split; 0 = ceil(sqrt(p))
  int min_leaf = 1;
  int max_depth = 0;  // 0 = unlimited
  std::uint64_t seed = 0;
};

struct Forest {
  std::vector<Tree> trees;
  std::vector<std::vector<std::int32_t>> oob_indices;  // per tree, ascending
  std::int32_t feature_count = 0;
  ForestParams params;  // as resolved at fit time (mtry concrete)
};

struct SplitCandidate {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
};

// 1 - p0^2 - p1^2 over binary labels. Throws on empty input.
double gini_impurity(std::span<const int> labels);

// Best threshold over the candidate features, maximizing weighted Gini
// decrease. Thresholds are midpoints between consecutive distinct sorted
// values; ties resolve to the lowest feature index, then lowest threshold.
// Rows may contain repeats (bootstrap multiset). Returns nullopt if no
// split keeps min_leaf rows per side with a positive decrease.
std::optional<SplitCandidate> best_split(const Dataset& data,
                                         std::span<const std::int32_t> rows,
                                         std::span<const std::int32_t> candidate_features,
                                         int min_leaf);

// Bootstrap-aggregated forest; per-tree seeds derive from (seed, tree index)
// so the result is identical under any execution order.
Forest fit_forest(const Dataset& samples, const ForestParams& params,
                  std::uint64_t seed, Exec exec = Exec::Parallel);

// Mean leaf class-1 fraction over trees. Throws on dimension mismatch.
double predict_proba(const Forest& forest, std::span<const double> x);

std::vector<double> predict_proba_batch(const Forest& forest,
                                        const std::vector<std::vector<double>>& rows,
                                        Exec exec = Exec::Parallel);

// Per-feature Gini importance: impurity decrease weighted by node sample
// fraction, summed over all trees and normalized to 1. A forest with no
// internal node yields an all-zero vector.
std::vector<double> feature_importance(const Forest& forest);

}  // namespace georf
