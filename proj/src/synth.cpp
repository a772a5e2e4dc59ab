#include "georf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "georf/preprocess.hpp"
#include "georf/rng.hpp"

namespace georf {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Region intercept hitting the target high-label share under the planted
// coefficients; the mean of sigmoids is monotone in c, so bisection suffices.
double calibrate_intercept(const std::vector<double>& linear_terms,
                           double target) {
  double lo = -30.0, hi = 30.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (double t : linear_terms) mean += sigmoid(mid + t);
    mean /= static_cast<double>(linear_terms.size());
    (mean < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SynthResult generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  if (config.n_events < 10) throw std::invalid_argument("synth: n_events < 10");
  if (config.n_regions < 2) throw std::invalid_argument("synth: n_regions < 2");
  if (config.n_layers < 3) throw std::invalid_argument("synth: n_layers < 3");
  if (!(config.imbalance_high > 0.0 && config.imbalance_high < 1.0))
    throw std::invalid_argument("synth: imbalance_high outside (0,1)");

  const int k_regions = config.n_regions;
  const int n = config.n_events;
  const int p = config.n_layers;

  std::vector<Point> centers;
  centers.reserve(k_regions);
  for (int r = 0; r < k_regions; ++r) {
    const double theta =
        2.0 * std::numbers::pi * static_cast<double>(r) / k_regions;
    centers.push_back({config.area_center_m + config.region_ring_m * std::cos(theta),
                       config.area_center_m + config.region_ring_m * std::sin(theta)});
  }

  SynthResult result;

  // Layers: per region a lognormal intensity factor scales the point budget,
  // so layer density varies by region and buffer counts carry region signal.
  {
    Rng rng = make_rng(seed, 1);
    std::normal_distribution<double> log_intensity(0.0, 0.7);
    std::normal_distribution<double> scatter(0.0, config.layer_scatter_m);
    for (int l = 0; l < p; ++l) {
      GeoLayer layer;
      char name[16];
      std::snprintf(name, sizeof(name), "layer%02d", l);
      layer.name = name;
      for (int r = 0; r < k_regions; ++r) {
        const double factor = std::exp(log_intensity(rng));
        const auto count = static_cast<int>(std::llround(
            static_cast<double>(config.layer_points_per_region) * factor));
        for (int i = 0; i < count; ++i) {
          LayerFeature f;
          f.location = {centers[r].u + scatter(rng), centers[r].v + scatter(rng)};
          layer.features.push_back(f);
        }
      }
      result.layers.push_back(std::move(layer));
    }
  }

  // Events: round-robin region membership, Gaussian scatter around centers.
  std::vector<Point> locations(n);
  result.truth.region.resize(n);
  {
    Rng rng = make_rng(seed, 2);
    std::normal_distribution<double> scatter(0.0, config.event_scatter_m);
    for (int i = 0; i < n; ++i) {
      const int r = i % k_regions;
      result.truth.region[i] = r;
      locations[i] = {centers[r].u + scatter(rng), centers[r].v + scatter(rng)};
    }
  }

  // Features are real buffer counts over the generated layers; the pipeline's
  // featurize stage recomputes exactly these values.
  std::vector<std::vector<double>> raw(n, std::vector<double>(p, 0.0));
  for (int l = 0; l < p; ++l) {
    const auto agg = buffer_aggregate(result.layers[l], locations,
                                      config.buffer_radius_m, BufferMode::Count);
    for (int i = 0; i < n; ++i) raw[i][l] = agg.values[i];
  }
  auto z = zscore_fit_apply(raw);
  result.truth.features_z.rows = std::move(z.rows);
  for (const auto& layer : result.layers)
    result.truth.features_z.names.push_back(layer.name + "_count");

  // Planted coefficients. The last two features carry the same sign in every
  // region; one low-index feature per region flips sign between regions, the
  // part only a localized model can exploit.
  result.truth.global_features = {p - 2, p - 1};
  std::vector<std::vector<double>> beta(k_regions, std::vector<double>(p, 0.0));
  for (int r = 0; r < k_regions; ++r) {
    const int feature = config.heterogeneous ? (r / 2) % (p - 2) : 0;
    const int sign = config.heterogeneous ? (r % 2 ? -1 : 1) : 1;
    result.truth.local_feature.push_back(feature);
    result.truth.local_sign.push_back(sign);
    beta[r][feature] += sign * config.local_signal;
    beta[r][p - 2] += config.global_signal;
    beta[r][p - 1] += config.global_signal;
  }

  std::vector<double> intercept(k_regions, 0.0);
  for (int r = 0; r < k_regions; ++r) {
    std::vector<double> terms;
    for (int i = 0; i < n; ++i) {
      if (result.truth.region[i] != r) continue;
      double t = 0.0;
      for (int j = 0; j < p; ++j)
        t += beta[r][j] * result.truth.features_z.rows[i][j];
      terms.push_back(t);
    }
    intercept[r] = calibrate_intercept(terms, config.imbalance_high);
  }

  result.truth.p_high.resize(n);
  std::vector<int> labels(n);
  {
    Rng rng = make_rng(seed, 3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      const int r = result.truth.region[i];
      double t = intercept[r];
      for (int j = 0; j < p; ++j)
        t += beta[r][j] * result.truth.features_z.rows[i][j];
      result.truth.p_high[i] = sigmoid(t);
      labels[i] = unit(rng) < result.truth.p_high[i] ? 1 : 0;
    }
  }

  {
    Rng rng = make_rng(seed, 4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    result.events.resize(n);
    for (int i = 0; i < n; ++i) {
      auto& e = result.events[i];
      e.id = i + 1;
      e.location = locations[i];
      e.severity_binary = labels[i];
      const bool first = unit(rng) < 0.5;
      e.severity_raw = labels[i] ? (first ? Severity::Moderate : Severity::Major)
                                 : (first ? Severity::NoDamage : Severity::Minor);
    }
  }

  const double extent =
      config.region_ring_m +
      3.5 * std::max(config.event_scatter_m, config.layer_scatter_m);
  const double lo = config.area_center_m - extent;
  const double hi = config.area_center_m + extent;
  result.boundary = {{lo, lo}, {hi, lo}, {hi, hi}, {lo, hi}};
  return result;
}

}  // namespace georf
