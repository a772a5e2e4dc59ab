#include "georf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "georf/rng.hpp"

namespace georf {

namespace {

inline double gini_from_counts(std::int64_t c1, std::int64_t n) {
  const double p1 = static_cast<double>(c1) / static_cast<double>(n);
  const double p0 = static_cast<double>(n - c1) / static_cast<double>(n);
  return 1.0 - p0 * p0 - p1 * p1;
}

inline double gini_from_fraction(double p1) {
  return 1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1);
}

struct TreeBuilder {
  const Dataset& data;
  const ForestParams& params;
  Rng rng;
  Tree tree;
  std::vector<std::int32_t> all_features;
  std::vector<std::int32_t> draw_buf;

  TreeBuilder(const Dataset& d, const ForestParams& p, std::uint64_t tree_seed)
      : data(d), params(p), rng(tree_seed) {
    const auto n_feat = static_cast<std::int32_t>(d.front().features.size());
    all_features.resize(n_feat);
    std::iota(all_features.begin(), all_features.end(), 0);
  }

  // mtry distinct features, ascending. Partial Fisher-Yates; one rng draw
  // per picked feature keeps consumption order fixed.
  std::span<const std::int32_t> draw_candidates() {
    const int p = static_cast<int>(all_features.size());
    if (params.mtry >= p) return all_features;
    draw_buf = all_features;
    for (int i = 0; i < params.mtry; ++i) {
      std::uniform_int_distribution<int> pick(i, p - 1);
      std::swap(draw_buf[i], draw_buf[pick(rng)]);
    }
    draw_buf.resize(params.mtry);
    std::sort(draw_buf.begin(), draw_buf.end());
    return draw_buf;
  }

  std::int32_t build(const std::vector<std::int32_t>& rows, int depth) {
    const auto n = static_cast<std::int64_t>(rows.size());
    std::int64_t c1 = 0;
    for (auto r : rows) c1 += data[r].label;

    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[id].class1_fraction =
        static_cast<double>(c1) / static_cast<double>(n);
    tree.nodes[id].sample_count = static_cast<std::int32_t>(n);

    const bool pure = (c1 == 0 || c1 == n);
    const bool depth_capped = params.max_depth > 0 && depth >= params.max_depth;
    if (pure || depth_capped || n < 2 * params.min_leaf) return id;

    const auto candidates = draw_candidates();
    const auto split = best_split(data, rows, candidates, params.min_leaf);
    if (!split) return id;

    std::vector<std::int32_t> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (auto r : rows) {
      if (data[r].features[split->feature] < split->threshold)
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }

    tree.nodes[id].feature = split->feature;
    tree.nodes[id].threshold = split->threshold;
    const auto left_id = build(left_rows, depth + 1);
    tree.nodes[id].left = left_id;
    const auto right_id = build(right_rows, depth + 1);
    tree.nodes[id].right = right_id;
    return id;
  }
};

}  // namespace

double gini_impurity(std::span<const int> labels) {
  if (labels.empty()) throw std::invalid_argument("empty node");
  std::int64_t c1 = 0;
  for (int y : labels) c1 += y;
  return gini_from_counts(c1, static_cast<std::int64_t>(labels.size()));
}

std::optional<SplitCandidate> best_split(const Dataset& data,
                                         std::span<const std::int32_t> rows,
                                         std::span<const std::int32_t> candidate_features,
                                         int min_leaf) {
  const auto n = static_cast<std::int64_t>(rows.size());
  if (n < 2) return std::nullopt;

  std::int64_t c1_total = 0;
  for (auto r : rows) c1_total += data[r].label;
  if (c1_total == 0 || c1_total == n) return std::nullopt;
  const double parent_gini = gini_from_counts(c1_total, n);

  std::optional<SplitCandidate> best;
  std::vector<std::pair<double, int>> vals;  // (feature value, label)
  vals.reserve(rows.size());

  for (auto f : candidate_features) {
    vals.clear();
    for (auto r : rows) vals.emplace_back(data[r].features[f], data[r].label);
    std::sort(vals.begin(), vals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (vals.front().first == vals.back().first) continue;  // constant in node

    std::int64_t nl = 0, c1l = 0;
    for (std::int64_t i = 0; i + 1 < n; ++i) {
      nl += 1;
      c1l += vals[i].second;
      if (vals[i].first == vals[i + 1].first) continue;
      const std::int64_t nr = n - nl;
      if (nl < min_leaf || nr < min_leaf) continue;

      double threshold = 0.5 * (vals[i].first + vals[i + 1].first);
      // Split predicate is x < threshold; when the midpoint of two adjacent
      // representable values rounds onto an endpoint, fall back to the upper
      // value so the scanned partition matches the applied one.
      if (!(vals[i].first < threshold && threshold <= vals[i + 1].first))
        threshold = vals[i + 1].first;

      const double decrease =
          parent_gini -
          (static_cast<double>(nl) / static_cast<double>(n)) * gini_from_counts(c1l, nl) -
          (static_cast<double>(nr) / static_cast<double>(n)) *
              gini_from_counts(c1_total - c1l, nr);
      if (decrease > 0.0 &&
          (!best || decrease > best->impurity_decrease)) {
        best = SplitCandidate{f, threshold, decrease};
      }
    }
  }
  return best;
}

Forest fit_forest(const Dataset& samples, const ForestParams& params,
                  std::uint64_t seed, Exec exec) {
  if (samples.empty()) throw std::invalid_argument("fit_forest: no samples");
  const auto n = static_cast<std::int64_t>(samples.size());
  const auto p = static_cast<std::int32_t>(samples.front().features.size());
  if (p < 1) throw std::invalid_argument("fit_forest: no features");
  for (const auto& s : samples)
    if (static_cast<std::int32_t>(s.features.size()) != p)
      throw std::invalid_argument("fit_forest: ragged feature vectors");

  ForestParams resolved = params;
  if (resolved.b_trees < 1) throw std::invalid_argument("fit_forest: b_trees < 1");
  if (resolved.min_leaf < 1) throw std::invalid_argument("fit_forest: min_leaf < 1");
  if (resolved.mtry <= 0)
    resolved.mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
  resolved.mtry = std::min<int>(resolved.mtry, p);
  resolved.seed = seed;

  Forest forest;
  forest.feature_count = p;
  forest.params = resolved;
  forest.trees.resize(resolved.b_trees);
  forest.oob_indices.resize(resolved.b_trees);

  parallel_for(exec, resolved.b_trees, [&](std::size_t t) {
    Rng boot_rng(mix_seed(seed, 2 * t));
    std::uniform_int_distribution<std::int64_t> row(0, n - 1);
    std::vector<std::int32_t> bootstrap(n);
    std::vector<char> in_bag(n, 0);
    for (std::int64_t i = 0; i < n; ++i) {
      const auto r = row(boot_rng);
      bootstrap[i] = static_cast<std::int32_t>(r);
      in_bag[r] = 1;
    }
    std::vector<std::int32_t> oob;
    for (std::int64_t i = 0; i < n; ++i)
      if (!in_bag[i]) oob.push_back(static_cast<std::int32_t>(i));

    TreeBuilder builder(samples, resolved, mix_seed(seed, 2 * t + 1));
    builder.build(bootstrap, 0);
    forest.trees[t] = std::move(builder.tree);
    forest.oob_indices[t] = std::move(oob);
  });
  return forest;
}

namespace {

double predict_tree(const Tree& tree, std::span<const double> x) {
  std::int32_t id = 0;
  while (!tree.nodes[id].is_leaf()) {
    const auto& node = tree.nodes[id];
    id = x[node.feature] < node.threshold ? node.left : node.right;
  }
  return tree.nodes[id].class1_fraction;
}

}  // namespace

double predict_proba(const Forest& forest, std::span<const double> x) {
  if (static_cast<std::int32_t>(x.size()) != forest.feature_count)
    throw std::invalid_argument("predict_proba: feature dimension mismatch");
  double sum = 0.0;
  for (const auto& tree : forest.trees) sum += predict_tree(tree, x);
  return sum / static_cast<double>(forest.trees.size());
}

std::vector<double> predict_proba_batch(const Forest& forest,
                                        const std::vector<std::vector<double>>& rows,
                                        Exec exec) {
  std::vector<double> out(rows.size());
  for (const auto& r : rows)
    if (static_cast<std::int32_t>(r.size()) != forest.feature_count)
      throw std::invalid_argument("predict_proba_batch: feature dimension mismatch");
  parallel_for(exec, static_cast<std::ptrdiff_t>(rows.size()),
               [&](std::size_t i) { out[i] = predict_proba(forest, rows[i]); });
  return out;
}

std::vector<double> feature_importance(const Forest& forest) {
  std::vector<double> importance(forest.feature_count, 0.0);
  for (const auto& tree : forest.trees) {
    if (tree.nodes.empty()) continue;
    const double n_root = tree.nodes[0].sample_count;
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      const auto& l = tree.nodes[node.left];
      const auto& r = tree.nodes[node.right];
      const double n = node.sample_count;
      const double decrease = gini_from_fraction(node.class1_fraction) -
                              (l.sample_count / n) * gini_from_fraction(l.class1_fraction) -
                              (r.sample_count / n) * gini_from_fraction(r.class1_fraction);
      importance[node.feature] += (n / n_root) * decrease;
    }
  }
  const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (total > 0.0)
    for (auto& w : importance) w /= total;
  return importance;
}

}  // namespace georf
