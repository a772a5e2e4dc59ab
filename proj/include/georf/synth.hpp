#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "georf/event.hpp"
#include "georf/geo_features.hpp"

namespace georf {

// Synthetic study area: K region centers on a ring, event and layer point
// clouds scattered around them, and labels drawn from a logistic model whose
// coefficients differ by region in the heterogeneous scenario. Feature values
// are genuine buffer aggregates over the generated layers, so the featurize
// stage reproduces them bit for bit.
struct SynthConfig {
  int n_events = 600;
  int n_regions = 3;
  int n_layers = 10;
  double imbalance_high = 0.17;  // target share of high-severity labels
  double buffer_radius_m = 400.0;
  double area_center_m = 5000.0;
  double region_ring_m = 4000.0;
  double event_scatter_m = 1100.0;
  double layer_scatter_m = 1300.0;
  int layer_points_per_region = 60;
  double local_signal = 2.0;   // strength of the per-region coefficient
  double global_signal = 1.0;  // strength shared by every region
  bool heterogeneous = true;   // false: same coefficients everywhere
};

struct SynthTruth {
  std::vector<int> region;     // per event
  std::vector<double> p_high;  // per event, the Bernoulli parameter used
  FeatureMatrix features_z;    // standardized features fed to the logistic
  // Planted coefficient layout: per region, the locally flipped feature
  // index and its sign; shared features carry global_signal.
  std::vector<int> local_feature;
  std::vector<int> local_sign;
  std::vector<int> global_features;
};

struct SynthResult {
  std::vector<EventRecord> events;
  std::vector<GeoLayer> layers;  // one per feature, named layer00..
  Polygon boundary;              // square ring around the whole area
  SynthTruth truth;
};

SynthResult generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace georf
