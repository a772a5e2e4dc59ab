#include "georf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "georf/preprocess.hpp"
#include "georf/rng.hpp"

namespace georf {

ConfusionMatrix confusion(std::span<const double> predictions,
                          std::span<const int> labels, double threshold) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("confusion: length mismatch");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("confusion: threshold outside (0,1)");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool predicted_high = predictions[i] >= threshold;
    if (labels[i] == 1)
      (predicted_high ? cm.tp : cm.fn) += 1;
    else
      (predicted_high ? cm.fp : cm.tn) += 1;
  }
  return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  if (cm.tp + cm.fn > 0)
    m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  if (cm.tp + cm.fp > 0)
    m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  if (cm.total() > 0)
    m.accuracy =
        static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  return m;
}

std::optional<double> r_squared(std::span<const double> predictions,
                                std::span<const double> labels) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("r_squared: length mismatch");
  if (labels.size() < 2) return std::nullopt;
  const double mean =
      std::accumulate(labels.begin(), labels.end(), 0.0) / labels.size();
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double r = labels[i] - predictions[i];
    const double d = labels[i] - mean;
    ss_res += r * r;
    ss_tot += d * d;
  }
  if (ss_tot == 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

std::optional<WelchResult> welch_ttest(std::span<const double> a,
                                       std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) return std::nullopt;
  const auto n_a = static_cast<double>(a.size());
  const auto n_b = static_cast<double>(b.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n_a;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n_b;
  double var_a = 0.0, var_b = 0.0;
  for (double x : a) var_a += (x - mean_a) * (x - mean_a);
  for (double x : b) var_b += (x - mean_b) * (x - mean_b);
  var_a /= n_a - 1.0;
  var_b /= n_b - 1.0;

  WelchResult result;
  const double diff = mean_a - mean_b;
  result.direction = diff > 0.0 ? 1 : diff < 0.0 ? -1 : 0;
  const double se_sq = var_a / n_a + var_b / n_b;
  if (se_sq == 0.0) {
    result.t = diff == 0.0 ? 0.0
                           : std::copysign(
                                 std::numeric_limits<double>::infinity(), diff);
    result.df = n_a + n_b - 2.0;
    result.p_two_sided = diff == 0.0 ? 1.0 : 0.0;
    return result;
  }
  result.t = diff / std::sqrt(se_sq);
  const double qa = var_a / n_a, qb = var_b / n_b;
  result.df = se_sq * se_sq /
              (qa * qa / (n_a - 1.0) + qb * qb / (n_b - 1.0));
  boost::math::students_t dist(result.df);
  result.p_two_sided = 2.0 * boost::math::cdf(dist, -std::abs(result.t));
  return result;
}

std::vector<ZoneTestRow> zone_association_ttest(
    std::span<const double> cell_risk, const FeatureMatrix& cell_features,
    double risk_threshold) {
  if (cell_risk.size() != cell_features.n_rows())
    throw std::invalid_argument("zone_association_ttest: length mismatch");
  std::vector<ZoneTestRow> out;
  out.reserve(cell_features.n_cols());
  for (std::size_t j = 0; j < cell_features.n_cols(); ++j) {
    std::vector<double> high, low;
    for (std::size_t i = 0; i < cell_risk.size(); ++i)
      (cell_risk[i] >= risk_threshold ? high : low)
          .push_back(cell_features.rows[i][j]);
    ZoneTestRow row;
    row.feature = cell_features.names[j];
    row.test = welch_ttest(high, low);
    out.push_back(std::move(row));
  }
  return out;
}

SplitIndices stratified_split(std::span<const int> labels, double test_fraction,
                              std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("stratified_split: test_fraction outside [0,1)");
  SplitIndices split;
  for (int cls : {0, 1}) {
    std::vector<std::int32_t> members;
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(labels.size()); ++i)
      if (labels[i] == cls) members.push_back(i);
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(cls));
    deterministic_shuffle(members, rng);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    for (std::size_t i = 0; i < members.size(); ++i)
      (i < n_test ? split.test : split.train).push_back(members[i]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<SweepRow> sweep_localization(const Dataset& samples,
                                         const GrfHyperParams& hyper_base,
                                         std::span<const double> a_values,
                                         std::uint64_t split_seed,
                                         const SweepOptions& options, Exec exec) {
  if (a_values.empty())
    throw std::invalid_argument("sweep_localization: no a values");

  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  const auto split =
      stratified_split(labels, options.test_fraction, split_seed);

  Dataset train;
  train.reserve(split.train.size());
  std::vector<std::vector<double>> train_features;
  for (auto i : split.train) {
    train.push_back(samples[i]);
    train_features.push_back(samples[i].features);
  }

  const Scaler stats = zscore_fit(train_features);
  for (auto& s : train) s.features = zscore_apply({s.features}, stats).front();
  if (options.use_smote)
    train = rebalance_with_smote(train, options.smote_k,
                                 mix_seed(split_seed, 0x534d4f54));

  if (hyper_base.bandwidth_n > static_cast<int>(train.size()))
    throw std::invalid_argument(
        "bandwidth exceeds sample count; lower bandwidth_n below the "
        "post-split training size");

  GrfModel model =
      fit_grf(train, hyper_base, hyper_base.forest_params.seed, exec);
  model.scaler = stats;

  std::vector<std::vector<double>> test_features;
  std::vector<Point> test_coords;
  std::vector<int> test_labels;
  std::vector<double> test_labels_real;
  for (auto i : split.test) {
    test_features.push_back(zscore_apply({samples[i].features}, stats).front());
    test_coords.push_back(samples[i].location);
    test_labels.push_back(samples[i].label);
    test_labels_real.push_back(static_cast<double>(samples[i].label));
  }

  // Forests are independent of a, so the local and global predictions are
  // computed once and re-blended per requested a.
  const auto n_test = test_features.size();
  std::vector<double> local_pred(n_test), global_pred(n_test);
  parallel_for(exec, static_cast<std::ptrdiff_t>(n_test), [&](std::size_t i) {
    const auto detail = predict_detailed(model, test_features[i], test_coords[i]);
    local_pred[i] = detail.local;
    global_pred[i] = detail.global;
  });

  const double r2_global =
      r_squared(global_pred, test_labels_real).value_or(0.0);

  std::vector<SweepRow> rows;
  rows.reserve(a_values.size());
  std::vector<double> blended(n_test);
  for (double a : a_values) {
    for (std::size_t i = 0; i < n_test; ++i)
      blended[i] = a * local_pred[i] + (1.0 - a) * global_pred[i];
    SweepRow row;
    row.a = a;
    row.r2 = r_squared(blended, test_labels_real).value_or(0.0);
    row.r2_global = r2_global;
    const auto m = metrics(confusion(blended, test_labels, options.threshold));
    row.accuracy = m.accuracy;
    row.precision = m.precision;
    row.recall = m.recall;
    rows.push_back(std::move(row));
  }

  // Remark the argmax rows; ties resolve to the lower a whatever the row
  // order, so the annotation is a function of the table contents alone.
  auto annotate = [&rows](auto metric_of, const char* label) {
    std::size_t best = rows.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto v = metric_of(rows[i]);
      if (!v) continue;
      if (best == rows.size() || *v > *metric_of(rows[best]) ||
          (*v == *metric_of(rows[best]) && rows[i].a < rows[best].a))
        best = i;
    }
    if (best == rows.size()) return;
    auto& remarks = rows[best].remarks;
    if (!remarks.empty()) remarks += "; ";
    remarks += label;
  };
  annotate([](const SweepRow& r) { return r.accuracy; }, "Best Accuracy");
  annotate([](const SweepRow& r) { return r.recall; }, "Best Recall");
  return rows;
}

}  // namespace georf
