#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "georf/dataset.hpp"
#include "georf/parallel.hpp"

namespace georf {

// ---- SMOTE ----

struct SmoteProvenance {
  std::int32_t base = -1;      // minority row the segment starts from
  std::int32_t neighbor = -1;  // minority row the segment ends at
  double w = 0.0;
};

struct SmoteResult {
  std::vector<std::vector<double>> rows;
  std::vector<SmoteProvenance> provenance;  // one entry per synthetic row
};

// x_new = x + w*(x_N - x) componentwise. Exact at both endpoints.
std::vector<double> smote_interpolate(std::span<const double> x,
                                      std::span<const double> x_neighbor, double w);

// Base rows cycle round-robin; the neighbor is drawn uniformly from the
// base's k nearest minority rows (feature-space Euclidean, self excluded).
SmoteResult smote(const std::vector<std::vector<double>>& minority_rows,
                  int k_neighbors, int n_synthetic, std::uint64_t seed);

// Oversamples the minority class to parity with the majority. Synthetic
// sample coordinates are interpolated between the base and neighbor event
// locations with the same w as the features, so synthetic events stay inside
// the minority point cloud geographically as well.
Dataset rebalance_with_smote(const Dataset& train, int k_neighbors,
                             std::uint64_t seed);

// ---- Standardization ----

// Population standard deviation (divide by N). Constant columns map to 0 and
// carry the flag so downstream stages can log them.
Scaler zscore_fit(const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> zscore_apply(
    const std::vector<std::vector<double>>& rows, const Scaler& stats);

struct ZscoreResult {
  std::vector<std::vector<double>> rows;
  Scaler stats;
};
ZscoreResult zscore_fit_apply(const std::vector<std::vector<double>>& rows);

// ---- Mann-Whitney U ----

enum class GreaterIn { High, Low, None };

std::string to_string(GreaterIn g);

struct MwuResult {
  double u = 0.0;  // U of sample_a
  double p_two_sided = 1.0;
  GreaterIn greater_in = GreaterIn::None;
};

// sample_a is the high-severity group by pipeline convention; greater_in
// compares mean ranks. Exact enumeration p when n_a + n_b <= 12 with no
// ties, otherwise normal approximation with tie and continuity corrections.
MwuResult mann_whitney_u(std::span<const double> sample_a,
                         std::span<const double> sample_b);

// ---- Variance inflation factor ----

// VIF_j = 1/(1 - R2_j), column j regressed on the others plus an intercept.
// Perfect collinearity (including a constant column, which the intercept
// reproduces exactly) returns the cap 1e12.
inline constexpr double kVifCap = 1e12;
std::vector<double> vif(const std::vector<std::vector<double>>& rows,
                        Exec exec = Exec::Parallel);

// ---- Selection ----

struct SelectionRow {
  std::string name;
  double u = 0.0;
  double p_value = 1.0;
  GreaterIn greater_in = GreaterIn::None;
  double vif = 1.0;
  bool selected = false;
};

struct SelectionReport {
  std::vector<SelectionRow> rows;  // input order preserved
  double p_max = 0.2;
  double vif_max = 10.0;
};

// Keep a feature when vif < vif_max or p < p_max (both strict).
SelectionReport select_features(std::vector<SelectionRow> rows,
                                double p_max = 0.2, double vif_max = 10.0);

// Per-column MWU (label 1 = high sample) plus the joint VIF vector.
std::vector<SelectionRow> screen_features(const FeatureMatrix& matrix,
                                          std::span<const int> labels,
                                          Exec exec = Exec::Parallel);

}  // namespace georf
