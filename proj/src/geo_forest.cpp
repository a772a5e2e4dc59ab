#include "georf/geo_forest.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace georf {

GrfModel fit_grf(const Dataset& samples, const GrfHyperParams& hyper,
                 std::uint64_t seed, Exec exec) {
  const auto n = static_cast<std::int64_t>(samples.size());
  if (hyper.bandwidth_n > n)
    throw std::invalid_argument("bandwidth exceeds sample count");
  if (hyper.bandwidth_n < 2)
    throw std::invalid_argument("fit_grf: bandwidth_n < 2");
  if (!(hyper.local_weight_a >= 0.0 && hyper.local_weight_a <= 1.0))
    throw std::invalid_argument("fit_grf: local_weight_a outside [0,1]");
  if (hyper.local_mixing_k < 1)
    throw std::invalid_argument("fit_grf: local_mixing_k < 1");

  std::vector<Point> anchors;
  anchors.reserve(samples.size());
  for (const auto& s : samples) {
    if (!std::isfinite(s.location.u) || !std::isfinite(s.location.v))
      throw std::invalid_argument("fit_grf: non-finite coordinate");
    anchors.push_back(s.location);
  }
  const bool degenerate = std::all_of(anchors.begin(), anchors.end(), [&](const Point& p) {
    return p.u == anchors.front().u && p.v == anchors.front().v;
  });
  if (degenerate && n > 1)
    std::cerr << "warning: all training coordinates identical; "
                 "local kernels degenerate to the full dataset\n";

  GrfModel model;
  model.hyper = hyper;
  model.anchors = anchors;
  model.anchor_index = SpatialIndex(anchors);
  model.global_forest = fit_forest(samples, hyper.forest_params, seed, exec);
  model.local_forests.resize(n);

  // Every forest, global and local, is fit with the same seed. With
  // bandwidth_n == n each kernel is the full dataset in row order, so the
  // local forests coincide with the global forest bit for bit.
  parallel_for(exec, n, [&](std::size_t i) {
    auto kernel =
        model.anchor_index.knn(samples[i].location, hyper.bandwidth_n);
    const auto self = static_cast<std::int32_t>(i);
    if (std::find(kernel.begin(), kernel.end(), self) == kernel.end())
      kernel.back() = self;  // duplicate coordinates can crowd the anchor out
    std::sort(kernel.begin(), kernel.end());

    Dataset local_samples;
    local_samples.reserve(kernel.size());
    for (auto idx : kernel) local_samples.push_back(samples[idx]);
    model.local_forests[i] =
        fit_forest(local_samples, hyper.forest_params, seed, Exec::Serial);
  });
  return model;
}

GrfPrediction predict_detailed(const GrfModel& model, std::span<const double> x,
                               const Point& coord) {
  if (model.anchors.empty()) throw std::invalid_argument("predict: empty model");
  GrfPrediction out;
  out.global = predict_proba(model.global_forest, x);

  const int k = std::min<int>(model.hyper.local_mixing_k,
                              static_cast<int>(model.anchors.size()));
  const auto near = model.anchor_index.knn(coord, k);
  out.anchor = near.front();
  if (k == 1) {
    out.local = predict_proba(model.local_forests[near.front()], x);
  } else {
    // Inverse-distance mixing of the k nearest local forests; a query sitting
    // on an anchor uses that anchor's forest alone.
    double weight_sum = 0.0, acc = 0.0;
    for (auto idx : near) {
      const double d2 = squared_distance(coord, model.anchors[idx]);
      if (d2 < 1e-18) {
        acc = predict_proba(model.local_forests[idx], x);
        weight_sum = 1.0;
        break;
      }
      const double w = 1.0 / std::sqrt(d2);
      acc += w * predict_proba(model.local_forests[idx], x);
      weight_sum += w;
    }
    out.local = acc / weight_sum;
  }

  const double a = model.hyper.local_weight_a;
  out.value = a * out.local + (1.0 - a) * out.global;
  return out;
}

double predict_grf(const GrfModel& model, std::span<const double> x,
                   const Point& coord) {
  return predict_detailed(model, x, coord).value;
}

std::vector<double> predict_grf_batch(const GrfModel& model,
                                      const std::vector<std::vector<double>>& rows,
                                      const std::vector<Point>& coords,
                                      Exec exec) {
  if (rows.size() != coords.size())
    throw std::invalid_argument("predict_grf_batch: rows/coords size mismatch");
  std::vector<double> out(rows.size());
  parallel_for(exec, static_cast<std::ptrdiff_t>(rows.size()), [&](std::size_t i) {
    out[i] = predict_grf(model, rows[i], coords[i]);
  });
  return out;
}

}  // namespace georf
