#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "georf/dataset.hpp"
#include "georf/parallel.hpp"
#include "georf/spatial_index.hpp"

namespace georf {

// Point feature of a geospatial layer. Polygon sources are ingested as
// centroids carrying their area as weight; features born without a weight
// column count as unit weight.
struct LayerFeature {
  Point location;
  double weight = 1.0;
  std::string category;
};

struct GeoLayer {
  std::string name;
  std::vector<LayerFeature> features;
};

enum class BufferMode { Count, WeightSum, WeightMean };

struct BufferAggregate {
  std::vector<double> values;
  // Set when no layer feature fell inside the buffer. Count and sum are
  // legitimately 0 there; a mean is undefined and reported as 0 plus flag.
  std::vector<std::uint8_t> empty_buffer;
};

// Radial buffer aggregation, boundary inclusive (distance <= radius).
BufferAggregate buffer_aggregate(const GeoLayer& layer,
                                 std::span<const Point> centers, double radius,
                                 BufferMode mode, Exec exec = Exec::Parallel);

using Polygon = std::vector<Point>;  // ring; closing edge implied

// Even-odd ray casting over every ring, so interior rings act as holes.
bool point_in_polygon(const Point& p, std::span<const Polygon> rings);

struct RiskGrid {
  Point origin;          // bbox min corner, lattice anchor
  double spacing = 0.0;  // meters between neighbors in both axes
  std::size_t nu = 0;    // unclipped lattice extent, u axis
  std::size_t nv = 0;
  std::vector<Point> cells;  // row-major from origin, clipped if bounded
};

// Lattice over the inclusive bbox: floor(du/spacing + 1) columns by
// floor(dv/spacing + 1) rows.
RiskGrid make_grid(const Point& lo, const Point& hi, double spacing);
// Same, over the rings' bbox, keeping only in-polygon cells.
RiskGrid make_grid(std::span<const Polygon> boundary, double spacing);

// Inverse distance weighting over the k nearest samples (k <= 0 takes all);
// a query within 1e-9 m of a sample returns that sample's value.
double idw(const SpatialIndex& samples, std::span<const double> values,
           const Point& query, double power = 2.0, int k = 12);

std::vector<double> idw_surface(const SpatialIndex& samples,
                                std::span<const double> values,
                                std::span<const Point> queries,
                                double power = 2.0, int k = 12,
                                Exec exec = Exec::Parallel);

// Leave-one-out smoothing of values defined on the index's own points.
std::vector<double> idw_smooth(const SpatialIndex& samples,
                               std::span<const double> values,
                               double power = 2.0, int k = 12,
                               Exec exec = Exec::Parallel);

// Gaussian kernel density, 1/(2*pi*h^2*N) * sum exp(-d^2/(2h^2)); the
// discrete sum over a wide grid times cell area approaches 1.
std::vector<double> kde(std::span<const Point> points, double bandwidth,
                        const RiskGrid& grid, Exec exec = Exec::Parallel);

}  // namespace georf
