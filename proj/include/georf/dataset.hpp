#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace georf {

// Planar coordinate in meters (projected CRS).
struct Point {
  double u = 0.0;
  double v = 0.0;
};

inline double squared_distance(const Point& a, const Point& b) {
  const double du = a.u - b.u;
  const double dv = a.v - b.v;
  return du * du + dv * dv;
}

// One observation: feature vector, location, binary severity label
// (0 low / 1 high).
struct LabeledSample {
  std::vector<double> features;
  Point location;
  int label = 0;
};

using Dataset = std::vector<LabeledSample>;

// Column-named matrix of reals, one row per sample.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return names.size(); }
};

// Per-column standardization parameters (population SD). A column whose SD is
// exactly zero is flagged constant and maps to 0.
struct ColumnStats {
  double mean = 0.0;
  double sd = 0.0;
  bool constant = false;
};

using Scaler = std::vector<ColumnStats>;

}  // namespace georf
