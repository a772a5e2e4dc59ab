#include "georf/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "georf/rng.hpp"

namespace georf {

// ---- SMOTE ----

std::vector<double> smote_interpolate(std::span<const double> x,
                                      std::span<const double> x_neighbor,
                                      double w) {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    out[j] = std::lerp(x[j], x_neighbor[j], w);
  return out;
}

namespace {

double feature_distance_sq(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

// k nearest minority rows for each row, self excluded, (distance, index)
// ordered. Minority sets are small, so a direct scan is fine.
std::vector<std::vector<std::int32_t>> minority_neighbors(
    const std::vector<std::vector<double>>& rows, int k) {
  const auto n = static_cast<std::int32_t>(rows.size());
  std::vector<std::vector<std::int32_t>> out(n);
  std::vector<std::pair<double, std::int32_t>> dist;
  for (std::int32_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::int32_t j = 0; j < n; ++j)
      if (j != i) dist.emplace_back(feature_distance_sq(rows[i], rows[j]), j);
    const auto take = std::min<std::size_t>(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
    out[i].reserve(take);
    for (std::size_t t = 0; t < take; ++t) out[i].push_back(dist[t].second);
  }
  return out;
}

}  // namespace

SmoteResult smote(const std::vector<std::vector<double>>& minority_rows,
                  int k_neighbors, int n_synthetic, std::uint64_t seed) {
  if (minority_rows.size() < 2)
    throw std::invalid_argument("SMOTE requires >=2 minority samples");
  if (k_neighbors < 1) throw std::invalid_argument("smote: k_neighbors < 1");
  if (n_synthetic < 0) throw std::invalid_argument("smote: n_synthetic < 0");

  const auto n = static_cast<std::int32_t>(minority_rows.size());
  const auto neighbors = minority_neighbors(minority_rows, k_neighbors);

  SmoteResult result;
  result.rows.reserve(n_synthetic);
  result.provenance.reserve(n_synthetic);
  Rng rng = make_rng(seed, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < n_synthetic; ++s) {
    const std::int32_t base = s % n;
    const auto& cands = neighbors[base];
    std::uniform_int_distribution<std::size_t> pick(0, cands.size() - 1);
    const std::int32_t nb = cands[pick(rng)];
    const double w = unit(rng);
    result.rows.push_back(
        smote_interpolate(minority_rows[base], minority_rows[nb], w));
    result.provenance.push_back({base, nb, w});
  }
  return result;
}

Dataset rebalance_with_smote(const Dataset& train, int k_neighbors,
                             std::uint64_t seed) {
  std::vector<std::int32_t> idx0, idx1;
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(train.size()); ++i)
    (train[i].label == 1 ? idx1 : idx0).push_back(i);

  const bool minority_is_1 = idx1.size() < idx0.size();
  const auto& minority = minority_is_1 ? idx1 : idx0;
  const auto& majority = minority_is_1 ? idx0 : idx1;
  const auto n_synth =
      static_cast<int>(majority.size()) - static_cast<int>(minority.size());

  Dataset out = train;
  if (n_synth <= 0) return out;

  std::vector<std::vector<double>> minority_features;
  minority_features.reserve(minority.size());
  for (auto i : minority) minority_features.push_back(train[i].features);

  const auto synth = smote(minority_features, k_neighbors, n_synth, seed);
  const int label = minority_is_1 ? 1 : 0;
  for (int s = 0; s < n_synth; ++s) {
    const auto& prov = synth.provenance[s];
    const auto& base = train[minority[prov.base]].location;
    const auto& nb = train[minority[prov.neighbor]].location;
    LabeledSample sample;
    sample.features = synth.rows[s];
    sample.location = {std::lerp(base.u, nb.u, prov.w),
                       std::lerp(base.v, nb.v, prov.w)};
    sample.label = label;
    out.push_back(std::move(sample));
  }
  return out;
}

// ---- Standardization ----

Scaler zscore_fit(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2)
    throw std::invalid_argument("zscore requires at least 2 rows");
  const auto n = static_cast<double>(rows.size());
  const auto p = rows.front().size();
  Scaler stats(p);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[j];
    mean /= n;
    double var = 0.0;
    for (const auto& r : rows) {
      const double d = r[j] - mean;
      var += d * d;
    }
    var /= n;  // population variance
    stats[j].mean = mean;
    stats[j].sd = std::sqrt(var);
    stats[j].constant = stats[j].sd == 0.0;
  }
  return stats;
}

std::vector<std::vector<double>> zscore_apply(
    const std::vector<std::vector<double>>& rows, const Scaler& stats) {
  std::vector<std::vector<double>> out = rows;
  for (auto& r : out) {
    if (r.size() != stats.size())
      throw std::invalid_argument("zscore_apply: column count mismatch");
    for (std::size_t j = 0; j < stats.size(); ++j)
      r[j] = stats[j].constant ? 0.0 : (r[j] - stats[j].mean) / stats[j].sd;
  }
  return out;
}

ZscoreResult zscore_fit_apply(const std::vector<std::vector<double>>& rows) {
  ZscoreResult result;
  result.stats = zscore_fit(rows);
  result.rows = zscore_apply(rows, result.stats);
  return result;
}

// ---- Mann-Whitney U ----

std::string to_string(GreaterIn g) {
  switch (g) {
    case GreaterIn::High: return "high";
    case GreaterIn::Low: return "low";
    default: return "none";
  }
}

namespace {

// Midranks over the pooled sample; returns (rank sum of a, tie group sizes).
std::pair<double, std::vector<std::int64_t>> rank_sum_a(
    std::span<const double> a, std::span<const double> b) {
  std::vector<std::pair<double, int>> pooled;  // (value, is_a)
  pooled.reserve(a.size() + b.size());
  for (double x : a) pooled.emplace_back(x, 1);
  for (double x : b) pooled.emplace_back(x, 0);
  std::sort(pooled.begin(), pooled.end());

  double r_a = 0.0;
  std::vector<std::int64_t> tie_sizes;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const auto t = static_cast<std::int64_t>(j - i);
    // ranks i+1 .. j averaged
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (pooled[k].second) r_a += midrank;
    if (t > 1) tie_sizes.push_back(t);
    i = j;
  }
  return {r_a, tie_sizes};
}

// Arrangement counts by U value: g[i][j][u] counts the ways to interleave i
// a-ranks and j b-ranks with statistic u, via the classic recurrence
// g(i,j,u) = g(i-1,j,u-j) + g(i,j-1,u). Sizes are tiny (n_a + n_b <= 12).
std::vector<double> u_distribution(int n_a, int n_b) {
  const int u_max = n_a * n_b;
  std::vector<std::vector<std::vector<double>>> g(
      n_a + 1, std::vector<std::vector<double>>(
                   n_b + 1, std::vector<double>(u_max + 1, 0.0)));
  for (int j = 0; j <= n_b; ++j) g[0][j][0] = 1.0;
  for (int i = 0; i <= n_a; ++i) g[i][0][0] = 1.0;
  for (int i = 1; i <= n_a; ++i)
    for (int j = 1; j <= n_b; ++j)
      for (int u = 0; u <= u_max; ++u) {
        const double with_hi_a = u >= j ? g[i - 1][j][u - j] : 0.0;
        g[i][j][u] = with_hi_a + g[i][j - 1][u];
      }
  return g[n_a][n_b];
}

}  // namespace

MwuResult mann_whitney_u(std::span<const double> sample_a,
                         std::span<const double> sample_b) {
  if (sample_a.empty() || sample_b.empty())
    throw std::invalid_argument("mann_whitney_u: empty sample");
  const auto n_a = static_cast<std::int64_t>(sample_a.size());
  const auto n_b = static_cast<std::int64_t>(sample_b.size());
  const auto n = n_a + n_b;

  const auto [r_a, tie_sizes] = rank_sum_a(sample_a, sample_b);
  const double u_a = r_a - 0.5 * static_cast<double>(n_a * (n_a + 1));
  const double u_b = static_cast<double>(n_a * n_b) - u_a;

  MwuResult result;
  result.u = u_a;
  const double mean_rank_a = r_a / static_cast<double>(n_a);
  const double total_ranks = 0.5 * static_cast<double>(n * (n + 1));
  const double mean_rank_b = (total_ranks - r_a) / static_cast<double>(n_b);
  if (mean_rank_a > mean_rank_b)
    result.greater_in = GreaterIn::High;
  else if (mean_rank_a < mean_rank_b)
    result.greater_in = GreaterIn::Low;

  if (n <= 12 && tie_sizes.empty()) {
    const auto dist = u_distribution(static_cast<int>(n_a), static_cast<int>(n_b));
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    const double u_min = std::min(u_a, u_b);
    const double u_hi = static_cast<double>(n_a * n_b) - u_min;
    double mass = 0.0;
    for (std::size_t u = 0; u < dist.size(); ++u) {
      const auto uv = static_cast<double>(u);
      if (uv <= u_min || uv >= u_hi) mass += dist[u];
    }
    result.p_two_sided = std::min(1.0, mass / total);
    return result;
  }

  const double mu = 0.5 * static_cast<double>(n_a * n_b);
  double tie_term = 0.0;
  for (auto t : tie_sizes)
    tie_term += static_cast<double>(t * t * t - t);
  const double var =
      (static_cast<double>(n_a * n_b) / 12.0) *
      (static_cast<double>(n + 1) -
       tie_term / static_cast<double>(n * (n - 1)));
  if (var <= 0.0) {  // every pooled value identical
    result.p_two_sided = 1.0;
    result.greater_in = GreaterIn::None;
    return result;
  }
  const double sigma = std::sqrt(var);
  const double z = std::max(0.0, std::abs(u_a - mu) - 0.5) / sigma;
  result.p_two_sided = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return result;
}

// ---- Variance inflation factor ----

std::vector<double> vif(const std::vector<std::vector<double>>& rows, Exec exec) {
  if (rows.empty()) throw std::invalid_argument("vif: empty matrix");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(rows.front().size());
  if (p < 2) throw std::invalid_argument("VIF needs >=2 features");

  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != p)
      throw std::invalid_argument("vif: ragged matrix");
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rows[i][j];
  }

  std::vector<double> out(p, 1.0);
  parallel_for(exec, p, [&](std::size_t jz) {
    const auto j = static_cast<Eigen::Index>(jz);
    Eigen::MatrixXd a(n, p);  // intercept plus the other p-1 columns
    a.col(0).setOnes();
    Eigen::Index c = 1;
    for (Eigen::Index k = 0; k < p; ++k)
      if (k != j) a.col(c++) = x.col(k);
    const Eigen::VectorXd y = x.col(j);

    const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(y);
    const double ss_res = (y - a * beta).squaredNorm();
    const double mean = y.mean();
    const double ss_tot = (y.array() - mean).square().sum();

    double v;
    if (ss_tot <= 0.0) {
      v = kVifCap;  // constant column, reproduced exactly by the intercept
    } else {
      const double r2 = 1.0 - ss_res / ss_tot;
      const double denom = 1.0 - r2;
      v = denom <= 1e-12 ? kVifCap : std::clamp(1.0 / denom, 1.0, kVifCap);
    }
    out[jz] = v;
  });
  return out;
}

// ---- Selection ----

SelectionReport select_features(std::vector<SelectionRow> rows, double p_max,
                                double vif_max) {
  SelectionReport report;
  report.p_max = p_max;
  report.vif_max = vif_max;
  for (auto& row : rows)
    row.selected = row.vif < vif_max || row.p_value < p_max;
  report.rows = std::move(rows);
  return report;
}

std::vector<SelectionRow> screen_features(const FeatureMatrix& matrix,
                                          std::span<const int> labels, Exec exec) {
  const auto n = matrix.n_rows();
  const auto p = matrix.n_cols();
  if (labels.size() != n)
    throw std::invalid_argument("screen_features: label count mismatch");

  const auto vifs = vif(matrix.rows, exec);
  std::vector<SelectionRow> out(p);
  parallel_for(exec, static_cast<std::ptrdiff_t>(p), [&](std::size_t j) {
    std::vector<double> high, low;
    for (std::size_t i = 0; i < n; ++i)
      (labels[i] == 1 ? high : low).push_back(matrix.rows[i][j]);
    const auto mwu = mann_whitney_u(high, low);
    out[j].name = j < matrix.names.size() ? matrix.names[j] : "";
    out[j].u = mwu.u;
    out[j].p_value = mwu.p_two_sided;
    out[j].greater_in = mwu.greater_in;
    out[j].vif = vifs[j];
  });
  return out;
}

}  // namespace georf
