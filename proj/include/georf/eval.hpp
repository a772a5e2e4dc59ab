#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "georf/dataset.hpp"
#include "georf/geo_forest.hpp"

namespace georf {

struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;
  std::int64_t total() const { return tp + fp + tn + fn; }
};

// Boundary rule: prediction >= threshold classifies as 1.
ConfusionMatrix confusion(std::span<const double> predictions,
                          std::span<const int> labels, double threshold = 0.5);

// Undefined denominators surface as empty optionals, never NaN.
struct Metrics {
  std::optional<double> recall;
  std::optional<double> precision;
  std::optional<double> accuracy;
};
Metrics metrics(const ConfusionMatrix& cm);

// 1 - SS_res/SS_tot; empty when the labels cannot carry variance.
std::optional<double> r_squared(std::span<const double> predictions,
                                std::span<const double> labels);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
  int direction = 0;  // sign of mean(a) - mean(b)
};

// Welch two-sample t-test; empty when either side has < 2 values. Zero
// pooled standard error degenerates to p=1 (equal means) or p=0.
std::optional<WelchResult> welch_ttest(std::span<const double> a,
                                       std::span<const double> b);

struct ZoneTestRow {
  std::string feature;
  std::optional<WelchResult> test;  // empty when a zone is too small
};

// Per-feature Welch test between cells with risk >= threshold and the rest.
std::vector<ZoneTestRow> zone_association_ttest(
    std::span<const double> cell_risk, const FeatureMatrix& cell_features,
    double risk_threshold = 0.5);

struct SplitIndices {
  std::vector<std::int32_t> train;
  std::vector<std::int32_t> test;
};

// Per-class shuffle then the rounded tail goes to test; both halves come out
// ascending so downstream iteration order is stable.
SplitIndices stratified_split(std::span<const int> labels, double test_fraction,
                              std::uint64_t seed);

struct SweepRow {
  double a = 0.0;
  double r2 = 0.0;         // blended predictions vs labels
  double r2_global = 0.0;  // global-forest predictions vs labels
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::string remarks;
};

struct SweepOptions {
  double test_fraction = 0.2;
  bool use_smote = true;
  int smote_k = 5;
  double threshold = 0.5;
};

// One stratified split, one set of forests (they do not depend on a), then
// per-a blending of the cached local and global predictions. Standardization
// and SMOTE see the training split only.
std::vector<SweepRow> sweep_localization(const Dataset& samples,
                                         const GrfHyperParams& hyper_base,
                                         std::span<const double> a_values,
                                         std::uint64_t split_seed,
                                         const SweepOptions& options = {},
                                         Exec exec = Exec::Parallel);

}  // namespace georf
