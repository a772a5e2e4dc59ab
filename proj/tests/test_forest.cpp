#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "georf/forest.hpp"
#include "georf/rng.hpp"

using georf::Dataset;
using georf::Exec;
using georf::Forest;
using georf::ForestParams;
using georf::LabeledSample;
using georf::Tree;
using georf::TreeNode;

namespace {

Dataset make_samples(const std::vector<std::vector<double>>& x,
                     const std::vector<int>& y) {
  Dataset out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    LabeledSample s;
    s.features = x[i];
    s.label = y[i];
    out.push_back(std::move(s));
  }
  return out;
}

double gini_of(std::span<const int> labels) {
  double ones = 0;
  for (int v : labels) ones += v;
  const double p1 = ones / static_cast<double>(labels.size());
  return 1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1);
}

// Exhaustive split search over the same candidate grid the contract
// describes: midpoints of consecutive distinct values, nudged to the upper
// value when rounding makes the midpoint fail to separate, predicate x < t.
struct OracleSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

std::vector<OracleSplit> oracle_candidates(
    const Dataset& data, const std::vector<std::int32_t>& rows,
    const std::vector<std::int32_t>& features, int min_leaf) {
  std::vector<int> labels;
  for (auto r : rows) labels.push_back(data[r].label);
  const double parent = gini_of(labels);
  const double n = static_cast<double>(rows.size());

  std::vector<OracleSplit> out;
  for (auto f : features) {
    std::vector<double> values;
    for (auto r : rows) values.push_back(data[r].features[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      double t = values[i] + (values[i + 1] - values[i]) / 2.0;
      if (!(values[i] < t && t <= values[i + 1])) t = values[i + 1];
      std::vector<int> left, right;
      for (auto r : rows)
        (data[r].features[f] < t ? left : right).push_back(data[r].label);
      if (static_cast<int>(left.size()) < min_leaf ||
          static_cast<int>(right.size()) < min_leaf)
        continue;
      const double gain = parent - (left.size() * gini_of(left) +
                                    right.size() * gini_of(right)) /
                                       n;
      if (gain <= 0.0) continue;
      out.push_back({f, t, gain});
    }
  }
  return out;
}

int tree_depth(const Tree& tree, std::int32_t id = 0) {
  const auto& node = tree.nodes[id];
  if (node.is_leaf()) return 0;
  return 1 + std::max(tree_depth(tree, node.left), tree_depth(tree, node.right));
}

// Independent tree walk for the prediction oracle.
double walk(const Tree& tree, std::span<const double> x) {
  std::int32_t id = 0;
  while (!tree.nodes[id].is_leaf())
    id = x[tree.nodes[id].feature] < tree.nodes[id].threshold
             ? tree.nodes[id].left
             : tree.nodes[id].right;
  return tree.nodes[id].class1_fraction;
}

Dataset random_samples(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> real(-3.0, 3.0);
  std::bernoulli_distribution coin(0.4);
  Dataset out;
  for (int i = 0; i < n; ++i) {
    LabeledSample s;
    for (int j = 0; j < p; ++j) s.features.push_back(real(rng));
    s.label = coin(rng) ? 1 : 0;
    s.location = {real(rng) * 100, real(rng) * 100};
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_SUITE("forest") {

TEST_CASE("gini impurity closed forms") {
  CHECK(georf::gini_impurity(std::vector<int>{0, 0, 0}) == 0.0);
  CHECK(georf::gini_impurity(std::vector<int>{1, 1}) == 0.0);
  CHECK(georf::gini_impurity(std::vector<int>{0, 1}) == doctest::Approx(0.5));
  CHECK(georf::gini_impurity(std::vector<int>{0, 0, 1}) ==
        doctest::Approx(4.0 / 9.0));
  for (int ones = 0; ones <= 10; ++ones) {
    std::vector<int> labels(10, 0);
    std::fill_n(labels.begin(), ones, 1);
    CHECK(georf::gini_impurity(labels) == doctest::Approx(gini_of(labels)));
  }
  CHECK_THROWS_WITH(georf::gini_impurity(std::vector<int>{}), "empty node");
}

TEST_CASE("best_split agrees with exhaustive search") {
  std::mt19937_64 rng(314);
  std::uniform_int_distribution<int> size(4, 40);
  std::uniform_int_distribution<int> nvals(2, 6);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = size(rng), p = 3;
    // Coarse value grid to force duplicates and threshold ties.
    std::uniform_int_distribution<int> grid(0, nvals(rng));
    std::vector<std::vector<double>> x(n, std::vector<double>(p));
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) x[i][j] = grid(rng);
      y[i] = coin(rng);
    }
    const auto data = make_samples(x, y);
    std::vector<std::int32_t> rows(n);
    if (rep % 2 == 0) {
      for (int i = 0; i < n; ++i) rows[i] = i;
    } else {
      // Bootstrap-style multiset; min_leaf counts repeats.
      std::uniform_int_distribution<int> pick(0, n - 1);
      for (int i = 0; i < n; ++i) rows[i] = pick(rng);
    }
    const std::vector<std::int32_t> features{0, 1, 2};
    const int min_leaf = 1 + rep % 3;

    const auto got = georf::best_split(data, rows, features, min_leaf);
    const auto candidates = oracle_candidates(data, rows, features, min_leaf);
    REQUIRE(got.has_value() == !candidates.empty());
    if (candidates.empty()) continue;

    double max_gain = 0.0, runner_up = 0.0;
    for (const auto& c : candidates)
      if (c.gain > max_gain) {
        runner_up = max_gain;
        max_gain = c.gain;
      } else {
        runner_up = std::max(runner_up, c.gain);
      }
    CHECK(got->impurity_decrease ==
          doctest::Approx(max_gain).epsilon(1e-12));
    // Independent impurity sums can differ from the counting sweep by ulps,
    // so the argmax is only pinned when the maximum is isolated.
    if (max_gain - runner_up > 1e-9) {
      const auto& top = *std::max_element(
          candidates.begin(), candidates.end(),
          [](const OracleSplit& a, const OracleSplit& b) {
            return a.gain < b.gain;
          });
      CHECK(got->feature == top.feature);
      CHECK(got->threshold == top.threshold);
    }
  }
}

TEST_CASE("best_split exact gain ties go to the lowest feature then threshold") {
  // Both features split 2|2 into pure halves; each gain is exactly 0.5 in
  // floating point, so the comparison really sees a tie.
  const auto two = make_samples({{0, 1}, {0, 1}, {1, 0}, {1, 0}}, {0, 0, 1, 1});
  const auto by_feature = georf::best_split(
      two, std::vector<std::int32_t>{0, 1, 2, 3}, std::vector<std::int32_t>{0, 1}, 1);
  REQUIRE(by_feature);
  CHECK(by_feature->feature == 0);
  CHECK(by_feature->impurity_decrease == 0.5);

  // Splitting off either pure singleton leaves the same remaining pair, and
  // both candidate gains evaluate to identical doubles; the lower threshold
  // must win.
  const auto mirror = make_samples({{0}, {1}, {2}}, {0, 1, 0});
  const auto by_threshold = georf::best_split(
      mirror, std::vector<std::int32_t>{0, 1, 2}, std::vector<std::int32_t>{0}, 1);
  REQUIRE(by_threshold);
  CHECK(by_threshold->threshold == 0.5);
}

TEST_CASE("best_split separates a clean step") {
  // x < 2.5 pins all zeros left.
  const auto data = make_samples({{1}, {2}, {3}, {4}}, {0, 0, 1, 1});
  const std::vector<std::int32_t> rows{0, 1, 2, 3};
  const auto split = georf::best_split(data, rows, std::vector<std::int32_t>{0}, 1);
  REQUIRE(split);
  CHECK(split->feature == 0);
  CHECK(split->threshold == 2.5);
  CHECK(split->impurity_decrease == doctest::Approx(0.5));
}

TEST_CASE("best_split edge guard keeps the predicate separating") {
  // The values are adjacent doubles, so the arithmetic midpoint rounds down
  // to the lower value and would put nothing on the left under x < t.
  const double lo = 1.0;
  const double hi = std::nextafter(lo, 2.0);
  const auto data = make_samples({{lo}, {lo}, {hi}, {hi}}, {0, 0, 1, 1});
  const std::vector<std::int32_t> rows{0, 1, 2, 3};
  const auto split = georf::best_split(data, rows, std::vector<std::int32_t>{0}, 1);
  REQUIRE(split);
  CHECK(split->threshold == hi);
  CHECK(lo < split->threshold);
}

TEST_CASE("best_split returns nothing for pure or unsplittable nodes") {
  const auto pure = make_samples({{1}, {2}, {3}}, {1, 1, 1});
  CHECK_FALSE(georf::best_split(pure, std::vector<std::int32_t>{0, 1, 2},
                                std::vector<std::int32_t>{0}, 1));
  const auto constant = make_samples({{5}, {5}, {5}, {5}}, {0, 1, 0, 1});
  CHECK_FALSE(georf::best_split(constant, std::vector<std::int32_t>{0, 1, 2, 3},
                                std::vector<std::int32_t>{0}, 1));
}

TEST_CASE("fit_forest is deterministic and policy independent") {
  const auto data = random_samples(80, 4, 11);
  ForestParams params;
  params.b_trees = 20;
  const auto a = georf::fit_forest(data, params, 77, Exec::Serial);
  const auto b = georf::fit_forest(data, params, 77, Exec::Parallel);
  const auto c = georf::fit_forest(data, params, 78, Exec::Serial);
  REQUIRE(a.trees.size() == b.trees.size());
  bool equal = true, differs_from_c = false;
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    const auto& na = a.trees[t].nodes;
    const auto& nb = b.trees[t].nodes;
    equal = equal && na.size() == nb.size();
    for (std::size_t i = 0; equal && i < na.size(); ++i)
      equal = na[i].feature == nb[i].feature &&
              na[i].threshold == nb[i].threshold && na[i].left == nb[i].left &&
              na[i].right == nb[i].right &&
              na[i].class1_fraction == nb[i].class1_fraction &&
              na[i].sample_count == nb[i].sample_count;
    differs_from_c =
        differs_from_c || a.trees[t].nodes.size() != c.trees[t].nodes.size();
  }
  CHECK(equal);
  CHECK(a.oob_indices == b.oob_indices);
  CHECK((differs_from_c || a.oob_indices != c.oob_indices));
}

TEST_CASE("bootstrap and out-of-bag sets replay from the seed contract") {
  const auto data = random_samples(60, 3, 5);
  ForestParams params;
  params.b_trees = 8;
  const auto forest = georf::fit_forest(data, params, 123);
  const auto n = static_cast<std::int64_t>(data.size());
  for (int t = 0; t < params.b_trees; ++t) {
    georf::Rng rng(georf::mix_seed(123, 2 * static_cast<std::uint64_t>(t)));
    std::uniform_int_distribution<std::int64_t> row(0, n - 1);
    std::vector<char> in_bag(n, 0);
    for (std::int64_t i = 0; i < n; ++i) in_bag[row(rng)] = 1;
    std::vector<std::int32_t> expect_oob;
    for (std::int64_t i = 0; i < n; ++i)
      if (!in_bag[i]) expect_oob.push_back(static_cast<std::int32_t>(i));
    CHECK(forest.oob_indices[t] == expect_oob);
    CHECK(std::is_sorted(forest.oob_indices[t].begin(),
                         forest.oob_indices[t].end()));
  }
}

TEST_CASE("tree structure honors min_leaf and max_depth") {
  const auto data = random_samples(120, 5, 21);
  ForestParams params;
  params.b_trees = 10;
  params.min_leaf = 7;
  params.max_depth = 3;
  const auto forest = georf::fit_forest(data, params, 9);
  for (const auto& tree : forest.trees) {
    CHECK(tree_depth(tree) <= 3);
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) CHECK(node.sample_count >= 7);
      CHECK(node.sample_count >= 1);
      CHECK(node.class1_fraction >= 0.0);
      CHECK(node.class1_fraction <= 1.0);
    }
  }
}

TEST_CASE("flat trees are preorder with consistent child counts") {
  const auto data = random_samples(100, 4, 31);
  ForestParams params;
  params.b_trees = 12;
  const auto forest = georf::fit_forest(data, params, 3);
  for (const auto& tree : forest.trees) {
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& node = tree.nodes[i];
      if (node.is_leaf()) continue;
      REQUIRE(node.left > static_cast<std::int32_t>(i));
      REQUIRE(node.right > node.left);
      REQUIRE(node.right < static_cast<std::int32_t>(tree.nodes.size()));
      CHECK(node.sample_count == tree.nodes[node.left].sample_count +
                                     tree.nodes[node.right].sample_count);
    }
  }
}

TEST_CASE("predict_proba averages independent tree walks") {
  const auto data = random_samples(90, 4, 41);
  ForestParams params;
  params.b_trees = 15;
  const auto forest = georf::fit_forest(data, params, 17);
  const auto queries = random_samples(25, 4, 42);
  std::vector<std::vector<double>> rows;
  for (const auto& q : queries) rows.push_back(q.features);

  const auto batch = georf::predict_proba_batch(forest, rows);
  const auto batch_serial = georf::predict_proba_batch(forest, rows, Exec::Serial);
  CHECK(batch == batch_serial);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double sum = 0;
    for (const auto& tree : forest.trees) sum += walk(tree, rows[i]);
    const double want = sum / static_cast<double>(forest.trees.size());
    CHECK(georf::predict_proba(forest, rows[i]) == want);
    CHECK(batch[i] == want);
    CHECK(batch[i] >= 0.0);
    CHECK(batch[i] <= 1.0);
  }
}

TEST_CASE("a separable signal is learned") {
  // Label is a pure threshold on feature 1; everything else is noise.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> real(-1.0, 1.0);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    x.push_back({real(rng), real(rng), real(rng)});
    y.push_back(x.back()[1] > 0.1 ? 1 : 0);
  }
  const auto data = make_samples(x, y);
  ForestParams params;
  params.b_trees = 40;
  const auto forest = georf::fit_forest(data, params, 6);
  int correct = 0;
  for (int i = 0; i < 200; ++i)
    correct += (georf::predict_proba(forest, x[i]) >= 0.5 ? 1 : 0) == y[i];
  CHECK(correct >= 195);

  const auto importance = georf::feature_importance(forest);
  REQUIRE(importance.size() == 3);
  CHECK(importance[1] > importance[0]);
  CHECK(importance[1] > importance[2]);
  CHECK(importance[1] > 0.8);
}

TEST_CASE("feature importance of a hand built stump") {
  // Root splits 10 samples into (4 pure, 6 pure) on feature 2; the decrease
  // is gini(0.4) weighted by the full node, normalized over one feature hit.
  Forest forest;
  forest.feature_count = 3;
  Tree tree;
  tree.nodes.push_back({2, 0.5, 1, 2, 0.4, 10});
  tree.nodes.push_back({-1, 0.0, -1, -1, 1.0, 4});
  tree.nodes.push_back({-1, 0.0, -1, -1, 0.0, 6});
  forest.trees.push_back(tree);
  const auto importance = georf::feature_importance(forest);
  REQUIRE(importance.size() == 3);
  CHECK(importance[0] == 0.0);
  CHECK(importance[1] == 0.0);
  CHECK(importance[2] == doctest::Approx(1.0));
}

TEST_CASE("feature importance sums to one and recomputes from nodes") {
  const auto data = random_samples(150, 6, 51);
  ForestParams params;
  params.b_trees = 25;
  const auto forest = georf::fit_forest(data, params, 29);
  const auto importance = georf::feature_importance(forest);
  REQUIRE(importance.size() == 6);
  double total = 0;
  for (double v : importance) {
    CHECK(v >= 0.0);
    total += v;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // Independent accumulation straight off the stored nodes.
  std::vector<double> raw(6, 0.0);
  for (const auto& tree : forest.trees) {
    const double n_root = tree.nodes[0].sample_count;
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      const auto gini = [](const TreeNode& v) {
        return 1.0 - v.class1_fraction * v.class1_fraction -
               (1.0 - v.class1_fraction) * (1.0 - v.class1_fraction);
      };
      const auto& l = tree.nodes[node.left];
      const auto& r = tree.nodes[node.right];
      const double decrease =
          gini(node) - (l.sample_count * gini(l) + r.sample_count * gini(r)) /
                           node.sample_count;
      raw[node.feature] += node.sample_count / n_root * decrease;
    }
  }
  double raw_total = 0;
  for (double v : raw) raw_total += v;
  for (int j = 0; j < 6; ++j)
    CHECK(importance[j] == doctest::Approx(raw[j] / raw_total).epsilon(1e-12));
}

TEST_CASE("an all leaf forest has zero importance") {
  const auto data = make_samples({{1}, {1}, {1}}, {1, 1, 1});  // pure node
  ForestParams params;
  params.b_trees = 3;
  const auto forest = georf::fit_forest(data, params, 2);
  for (double v : georf::feature_importance(forest)) CHECK(v == 0.0);
}

TEST_CASE("mtry defaults to ceil sqrt p and caps at p") {
  const auto data = random_samples(40, 7, 61);
  ForestParams params;
  params.b_trees = 2;
  CHECK(georf::fit_forest(data, params, 1).params.mtry == 3);
  params.mtry = 50;
  CHECK(georf::fit_forest(data, params, 1).params.mtry == 7);
}

TEST_CASE("fit_forest input validation") {
  CHECK_THROWS_WITH(georf::fit_forest({}, {}, 0), "fit_forest: no samples");
  auto ragged = make_samples({{1, 2}, {3}}, {0, 1});
  CHECK_THROWS_WITH(georf::fit_forest(ragged, {}, 0),
                    "fit_forest: ragged feature vectors");
  auto ok = make_samples({{1}, {2}}, {0, 1});
  ForestParams bad;
  bad.b_trees = 0;
  CHECK_THROWS_WITH(georf::fit_forest(ok, bad, 0), "fit_forest: b_trees < 1");
  bad.b_trees = 1;
  bad.min_leaf = 0;
  CHECK_THROWS_WITH(georf::fit_forest(ok, bad, 0), "fit_forest: min_leaf < 1");
  const auto forest = georf::fit_forest(ok, {}, 0);
  CHECK_THROWS_WITH(georf::predict_proba(forest, std::vector<double>{1, 2}),
                    "predict_proba: feature dimension mismatch");
}

}  // TEST_SUITE
