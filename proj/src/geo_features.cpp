#include "georf/geo_features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace georf {

BufferAggregate buffer_aggregate(const GeoLayer& layer,
                                 std::span<const Point> centers, double radius,
                                 BufferMode mode, Exec exec) {
  if (!(radius > 0.0)) throw std::invalid_argument("buffer_aggregate: radius <= 0");

  std::vector<Point> locations;
  locations.reserve(layer.features.size());
  for (const auto& f : layer.features) locations.push_back(f.location);
  const SpatialIndex index(locations);

  BufferAggregate out;
  out.values.assign(centers.size(), 0.0);
  out.empty_buffer.assign(centers.size(), 0);
  parallel_for(exec, static_cast<std::ptrdiff_t>(centers.size()), [&](std::size_t c) {
    const auto hits = index.within_radius(centers[c], radius);
    if (hits.empty()) {
      out.empty_buffer[c] = 1;
      return;
    }
    switch (mode) {
      case BufferMode::Count:
        out.values[c] = static_cast<double>(hits.size());
        break;
      case BufferMode::WeightSum: {
        double s = 0.0;
        for (auto i : hits) s += layer.features[i].weight;
        out.values[c] = s;
        break;
      }
      case BufferMode::WeightMean: {
        double s = 0.0;
        for (auto i : hits) s += layer.features[i].weight;
        out.values[c] = s / static_cast<double>(hits.size());
        break;
      }
    }
  });
  return out;
}

bool point_in_polygon(const Point& p, std::span<const Polygon> rings) {
  bool inside = false;
  for (const auto& ring : rings) {
    const auto n = ring.size();
    if (n < 3) continue;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const auto& a = ring[i];
      const auto& b = ring[j];
      // Half-open vertical span avoids double-counting shared vertices.
      if ((a.v > p.v) != (b.v > p.v)) {
        const double cross_u = (b.u - a.u) * (p.v - a.v) / (b.v - a.v) + a.u;
        if (p.u < cross_u) inside = !inside;
      }
    }
  }
  return inside;
}

RiskGrid make_grid(const Point& lo, const Point& hi, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("make_grid: spacing <= 0");
  if (!std::isfinite(lo.u) || !std::isfinite(lo.v) || !std::isfinite(hi.u) ||
      !std::isfinite(hi.v) || hi.u < lo.u || hi.v < lo.v)
    throw std::invalid_argument("make_grid: degenerate bbox");

  RiskGrid grid;
  grid.origin = lo;
  grid.spacing = spacing;
  grid.nu = static_cast<std::size_t>(std::floor((hi.u - lo.u) / spacing + 1.0));
  grid.nv = static_cast<std::size_t>(std::floor((hi.v - lo.v) / spacing + 1.0));
  grid.cells.reserve(grid.nu * grid.nv);
  for (std::size_t iv = 0; iv < grid.nv; ++iv)
    for (std::size_t iu = 0; iu < grid.nu; ++iu)
      grid.cells.push_back({lo.u + static_cast<double>(iu) * spacing,
                            lo.v + static_cast<double>(iv) * spacing});
  return grid;
}

RiskGrid make_grid(std::span<const Polygon> boundary, double spacing) {
  Point lo{std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Point hi{-std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};
  for (const auto& ring : boundary)
    for (const auto& p : ring) {
      lo.u = std::min(lo.u, p.u);
      lo.v = std::min(lo.v, p.v);
      hi.u = std::max(hi.u, p.u);
      hi.v = std::max(hi.v, p.v);
    }
  if (!std::isfinite(lo.u))
    throw std::invalid_argument("make_grid: degenerate bbox");

  RiskGrid grid = make_grid(lo, hi, spacing);
  std::vector<Point> kept;
  kept.reserve(grid.cells.size());
  for (const auto& cell : grid.cells)
    if (point_in_polygon(cell, boundary)) kept.push_back(cell);
  grid.cells = std::move(kept);
  return grid;
}

double idw(const SpatialIndex& samples, std::span<const double> values,
           const Point& query, double power, int k) {
  if (samples.size() == 0) throw std::invalid_argument("idw: no samples");
  if (values.size() != samples.size())
    throw std::invalid_argument("idw: values/samples size mismatch");
  const int take = k <= 0 ? static_cast<int>(samples.size()) : k;
  const auto near = samples.knn(query, take);

  constexpr double kExactHit = 1e-9;
  double wsum = 0.0, acc = 0.0;
  for (auto i : near) {
    const double d2 = squared_distance(query, samples.point(i));
    if (d2 < kExactHit * kExactHit) return values[i];
    const double w = std::pow(d2, -0.5 * power);
    wsum += w;
    acc += w * values[i];
  }
  return acc / wsum;
}

std::vector<double> idw_surface(const SpatialIndex& samples,
                                std::span<const double> values,
                                std::span<const Point> queries, double power,
                                int k, Exec exec) {
  std::vector<double> out(queries.size());
  parallel_for(exec, static_cast<std::ptrdiff_t>(queries.size()),
               [&](std::size_t q) {
                 out[q] = idw(samples, values, queries[q], power, k);
               });
  return out;
}

std::vector<double> idw_smooth(const SpatialIndex& samples,
                               std::span<const double> values, double power,
                               int k, Exec exec) {
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  if (values.size() != samples.size())
    throw std::invalid_argument("idw_smooth: values/samples size mismatch");
  std::vector<double> out(samples.size());
  const int take = k <= 0 ? static_cast<int>(samples.size()) : k;
  parallel_for(exec, n, [&](std::size_t q) {
    const auto& query = samples.point(static_cast<std::int32_t>(q));
    auto near = samples.knn(query, take + 1);
    std::erase(near, static_cast<std::int32_t>(q));
    if (static_cast<int>(near.size()) > take) near.resize(take);
    if (near.empty()) {
      out[q] = values[q];
      return;
    }
    constexpr double kExactHit = 1e-9;
    double wsum = 0.0, acc = 0.0;
    for (auto i : near) {
      const double d2 = squared_distance(query, samples.point(i));
      if (d2 < kExactHit * kExactHit) {
        wsum = 1.0;
        acc = values[i];
        break;
      }
      const double w = std::pow(d2, -0.5 * power);
      wsum += w;
      acc += w * values[i];
    }
    out[q] = acc / wsum;
  });
  return out;
}

std::vector<double> kde(std::span<const Point> points, double bandwidth,
                        const RiskGrid& grid, Exec exec) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth <= 0");
  std::vector<double> out(grid.cells.size(), 0.0);
  if (points.empty()) return out;
  const double h2 = bandwidth * bandwidth;
  const double norm =
      1.0 / (2.0 * std::numbers::pi * h2 * static_cast<double>(points.size()));
  parallel_for(exec, static_cast<std::ptrdiff_t>(grid.cells.size()),
               [&](std::size_t c) {
                 double s = 0.0;
                 for (const auto& p : points)
                   s += std::exp(-squared_distance(grid.cells[c], p) / (2.0 * h2));
                 out[c] = s * norm;
               });
  return out;
}

}  // namespace georf
