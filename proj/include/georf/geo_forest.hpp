#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "georf/dataset.hpp"
#include "georf/forest.hpp"
#include "georf/spatial_index.hpp"

namespace georf {

struct GrfHyperParams {
  int bandwidth_n = 100;        // neighbors per local kernel
  double local_weight_a = 0.5;  // blend weight on the local prediction
  ForestParams forest_params;   // shared by the global and every local forest
  // Extension, off by default: mix the k nearest local forests by inverse
  // distance instead of using the single nearest anchor.
  int local_mixing_k = 1;
};

// One local forest per training row; anchors are the training coordinates in
// row order, so anchor ties resolve to the lowest row index.
struct GrfModel {
  Forest global_forest;
  std::vector<Point> anchors;
  std::vector<Forest> local_forests;
  SpatialIndex anchor_index;
  GrfHyperParams hyper;
  std::vector<std::string> feature_names;
  Scaler scaler;  // standardization stats the features were fit under
};

struct GrfPrediction {
  double local = 0.0;
  double global = 0.0;
  double value = 0.0;          // a*local + (1-a)*global
  std::int32_t anchor = -1;    // nearest anchor row actually consulted
};

GrfModel fit_grf(const Dataset& samples, const GrfHyperParams& hyper,
                 std::uint64_t seed, Exec exec = Exec::Parallel);

GrfPrediction predict_detailed(const GrfModel& model, std::span<const double> x,
                               const Point& coord);

double predict_grf(const GrfModel& model, std::span<const double> x,
                   const Point& coord);

std::vector<double> predict_grf_batch(const GrfModel& model,
                                      const std::vector<std::vector<double>>& rows,
                                      const std::vector<Point>& coords,
                                      Exec exec = Exec::Parallel);

}  // namespace georf
