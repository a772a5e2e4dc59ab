#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "georf/geo_forest.hpp"

using georf::Dataset;
using georf::Exec;
using georf::GrfHyperParams;
using georf::LabeledSample;
using georf::Point;

namespace {

Dataset two_cluster_samples(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset out;
  for (int i = 0; i < n; ++i) {
    LabeledSample s;
    const bool west = i % 2 == 0;
    s.location = {(west ? 0.0 : 8000.0) + normal(rng) * 300,
                  normal(rng) * 300};
    s.features = {normal(rng), normal(rng)};
    // Opposite feature-label association per cluster.
    const double signal = s.features[0] + 0.4 * normal(rng);
    s.label = (west ? signal > 0 : signal < 0) ? 1 : 0;
    out.push_back(std::move(s));
  }
  return out;
}

bool forests_equal(const georf::Forest& a, const georf::Forest& b) {
  if (a.trees.size() != b.trees.size()) return false;
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    const auto& na = a.trees[t].nodes;
    const auto& nb = b.trees[t].nodes;
    if (na.size() != nb.size()) return false;
    for (std::size_t i = 0; i < na.size(); ++i)
      if (na[i].feature != nb[i].feature || na[i].threshold != nb[i].threshold ||
          na[i].left != nb[i].left || na[i].right != nb[i].right ||
          na[i].class1_fraction != nb[i].class1_fraction ||
          na[i].sample_count != nb[i].sample_count)
        return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("geo_forest") {

TEST_CASE("a full bandwidth collapses every local forest onto the global one") {
  const auto samples = two_cluster_samples(60, 1);
  GrfHyperParams hyper;
  hyper.bandwidth_n = 60;
  hyper.forest_params.b_trees = 10;
  const auto model = georf::fit_grf(samples, hyper, 33);
  REQUIRE(model.local_forests.size() == 60);
  REQUIRE(model.anchors.size() == 60);
  for (const auto& local : model.local_forests)
    CHECK(forests_equal(local, model.global_forest));

  // And so blended output is independent of a everywhere.
  const auto p0 = georf::predict_detailed(model, samples[7].features, {500, 100});
  CHECK(p0.local == p0.global);
}

TEST_CASE("fit is policy independent and seed deterministic") {
  const auto samples = two_cluster_samples(50, 2);
  GrfHyperParams hyper;
  hyper.bandwidth_n = 20;
  hyper.forest_params.b_trees = 8;
  const auto a = georf::fit_grf(samples, hyper, 5, Exec::Parallel);
  const auto b = georf::fit_grf(samples, hyper, 5, Exec::Serial);
  CHECK(forests_equal(a.global_forest, b.global_forest));
  for (std::size_t i = 0; i < a.local_forests.size(); ++i)
    CHECK(forests_equal(a.local_forests[i], b.local_forests[i]));

  std::vector<std::vector<double>> rows;
  std::vector<Point> coords;
  for (const auto& s : samples) {
    rows.push_back(s.features);
    coords.push_back(s.location);
  }
  CHECK(georf::predict_grf_batch(a, rows, coords, Exec::Parallel) ==
        georf::predict_grf_batch(b, rows, coords, Exec::Serial));
}

TEST_CASE("localization captures spatially flipped associations") {
  // The same feature predicts opposite labels in the two clusters. On held
  // out draws the global forest sees a cancelled marginal signal, while each
  // narrow kernel is trained on one cluster and keeps its sign.
  const auto samples = two_cluster_samples(160, 3);
  GrfHyperParams hyper;
  hyper.bandwidth_n = 40;
  hyper.forest_params.b_trees = 30;
  const auto model = georf::fit_grf(samples, hyper, 11);

  const auto probes = two_cluster_samples(200, 77);
  int local_correct = 0, global_correct = 0;
  for (const auto& s : probes) {
    const auto detail = georf::predict_detailed(model, s.features, s.location);
    local_correct += (detail.local >= 0.5 ? 1 : 0) == s.label;
    global_correct += (detail.global >= 0.5 ? 1 : 0) == s.label;
  }
  CHECK(local_correct > global_correct + 20);
  CHECK(local_correct >= 140);
  CHECK(global_correct <= 130);
}

TEST_CASE("blending is the stated affine combination") {
  const auto samples = two_cluster_samples(40, 4);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> real(-2.0, 2.0);
  for (double a : {0.0, 0.25, 0.5, 0.8, 1.0}) {
    GrfHyperParams hyper;
    hyper.bandwidth_n = 15;
    hyper.forest_params.b_trees = 6;
    hyper.local_weight_a = a;
    const auto model = georf::fit_grf(samples, hyper, 21);
    for (int rep = 0; rep < 30; ++rep) {
      const std::vector<double> x{real(rng), real(rng)};
      const Point coord{real(rng) * 4000 + 2000, real(rng) * 500};
      const auto detail = georf::predict_detailed(model, x, coord);
      CHECK(detail.value == a * detail.local + (1.0 - a) * detail.global);
      if (a == 0.0) CHECK(detail.value == detail.global);
      if (a == 1.0) CHECK(detail.value == detail.local);
      CHECK(georf::predict_grf(model, x, coord) == detail.value);
    }
  }
}

TEST_CASE("prediction uses the nearest anchor with low index ties") {
  Dataset samples;
  for (int i = 0; i < 8; ++i) {
    LabeledSample s;
    s.location = {static_cast<double>(i % 4) * 1000.0, i < 4 ? 0.0 : 1000.0};
    s.features = {static_cast<double>(i)};
    s.label = i % 2;
    samples.push_back(std::move(s));
  }
  GrfHyperParams hyper;
  hyper.bandwidth_n = 3;
  hyper.forest_params.b_trees = 4;
  const auto model = georf::fit_grf(samples, hyper, 2);

  // Next to anchor 5 the prediction must come from anchor 5's forest.
  const std::vector<double> x{1.0};
  const auto near5 = georf::predict_detailed(model, x, {1010.0, 990.0});
  CHECK(near5.anchor == 5);
  // Equidistant between anchors 0 and 4: the lower index wins.
  const auto tie = georf::predict_detailed(model, x, {0.0, 500.0});
  CHECK(tie.anchor == 0);
}

TEST_CASE("anchors stay inside their own kernels among duplicates") {
  // More coincident points than the bandwidth, so self inclusion needs the
  // explicit replacement step.
  Dataset samples;
  for (int i = 0; i < 12; ++i) {
    LabeledSample s;
    s.location = {100.0, 100.0};
    s.features = {static_cast<double>(i % 3), 1.0};
    s.label = i % 2;
    samples.push_back(std::move(s));
  }
  for (int i = 0; i < 6; ++i) {
    LabeledSample s;
    s.location = {5000.0 + i * 10.0, 80.0};
    s.features = {0.5, 0.0};
    s.label = (i + 1) % 2;
    samples.push_back(std::move(s));
  }
  GrfHyperParams hyper;
  hyper.bandwidth_n = 4;
  hyper.forest_params.b_trees = 3;

  std::stringstream captured;
  auto* old = std::cerr.rdbuf(captured.rdbuf());
  const auto model = georf::fit_grf(samples, hyper, 1);
  std::cerr.rdbuf(old);
  CHECK(captured.str().empty());  // two sites, not degenerate

  // Every anchor's local forest differs across anchors only through its
  // kernel; a kernel without its own anchor would train on the wrong rows.
  // Observable proxy: every local fit succeeded and yields valid output for
  // row 11, the anchor most easily crowded out by its 11 coincident twins.
  const auto p11 = georf::predict_detailed(model, samples[11].features,
                                           samples[11].location);
  CHECK(p11.local >= 0.0);
  CHECK(p11.local <= 1.0);
  CHECK(p11.anchor == 0);  // lowest coincident index wins the tie
  const auto p17 = georf::predict_detailed(model, samples[17].features,
                                           samples[17].location);
  CHECK(p17.anchor == 17);  // unique location, so the anchor is itself
}

TEST_CASE("identical coordinates everywhere warn and degrade gracefully") {
  Dataset samples;
  for (int i = 0; i < 10; ++i) {
    LabeledSample s;
    s.location = {7.0, 7.0};
    s.features = {static_cast<double>(i)};
    s.label = i % 2;
    samples.push_back(std::move(s));
  }
  GrfHyperParams hyper;
  hyper.bandwidth_n = 5;
  hyper.forest_params.b_trees = 3;

  std::stringstream captured;
  auto* old = std::cerr.rdbuf(captured.rdbuf());
  const auto model = georf::fit_grf(samples, hyper, 14);
  std::cerr.rdbuf(old);
  CHECK(captured.str().find("all training coordinates identical") !=
        std::string::npos);
  CHECK(model.local_forests.size() == 10);
}

TEST_CASE("local mixing blends the k nearest forests by inverse distance") {
  const auto samples = two_cluster_samples(30, 6);
  GrfHyperParams hyper;
  hyper.bandwidth_n = 10;
  hyper.forest_params.b_trees = 5;
  hyper.local_mixing_k = 3;
  const auto model = georf::fit_grf(samples, hyper, 8);

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> real(-1.5, 1.5);
  for (int rep = 0; rep < 20; ++rep) {
    const std::vector<double> x{real(rng), real(rng)};
    const Point coord{real(rng) * 3000 + 1000, real(rng) * 800};
    const auto detail = georf::predict_detailed(model, x, coord);

    // Brute-force the three nearest anchors and their weights.
    std::vector<std::pair<double, int>> dist;
    for (int i = 0; i < 30; ++i)
      dist.push_back({georf::squared_distance(coord, model.anchors[i]), i});
    std::sort(dist.begin(), dist.end());
    double wsum = 0, acc = 0;
    for (int i = 0; i < 3; ++i) {
      const double w = 1.0 / std::sqrt(dist[i].first);
      wsum += w;
      acc += w * georf::predict_proba(model.local_forests[dist[i].second], x);
    }
    CHECK(detail.local == doctest::Approx(acc / wsum).epsilon(1e-12));
    CHECK(detail.anchor == dist[0].second);
  }

  // Sitting exactly on an anchor short-circuits to that anchor's forest.
  const std::vector<double> probe{0.3, -0.2};
  const auto on_anchor = georf::predict_detailed(model, probe, model.anchors[4]);
  double same = georf::predict_proba(model.local_forests[on_anchor.anchor], probe);
  CHECK(on_anchor.local == same);
}

TEST_CASE("hyper parameter validation") {
  const auto samples = two_cluster_samples(10, 7);
  GrfHyperParams hyper;
  hyper.bandwidth_n = 11;
  CHECK_THROWS_WITH(georf::fit_grf(samples, hyper, 0),
                    "bandwidth exceeds sample count");
  hyper.bandwidth_n = 1;
  CHECK_THROWS_WITH(georf::fit_grf(samples, hyper, 0), "fit_grf: bandwidth_n < 2");
  hyper.bandwidth_n = 5;
  hyper.local_weight_a = 1.5;
  CHECK_THROWS_WITH(georf::fit_grf(samples, hyper, 0),
                    "fit_grf: local_weight_a outside [0,1]");
  hyper.local_weight_a = 0.5;
  hyper.local_mixing_k = 0;
  CHECK_THROWS_WITH(georf::fit_grf(samples, hyper, 0),
                    "fit_grf: local_mixing_k < 1");
}

}  // TEST_SUITE
