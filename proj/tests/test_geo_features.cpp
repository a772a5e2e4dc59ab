#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "georf/geo_features.hpp"
#include "georf/spatial_index.hpp"

using georf::BufferMode;
using georf::Exec;
using georf::GeoLayer;
using georf::LayerFeature;
using georf::Point;
using georf::Polygon;

namespace {

GeoLayer random_layer(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 2000.0);
  std::uniform_real_distribution<double> weight(0.1, 5.0);
  GeoLayer layer;
  layer.name = "random";
  for (int i = 0; i < n; ++i) {
    LayerFeature f;
    f.location = {coord(rng), coord(rng)};
    f.weight = weight(rng);
    layer.features.push_back(std::move(f));
  }
  return layer;
}

}  // namespace

TEST_SUITE("geo_features") {

TEST_CASE("buffer_aggregate matches brute force for every mode") {
  const auto layer = random_layer(600, 1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> coord(-100.0, 2100.0);
  std::vector<Point> centers;
  for (int i = 0; i < 80; ++i) centers.push_back({coord(rng), coord(rng)});
  const double radius = 220.0;

  const auto count =
      georf::buffer_aggregate(layer, centers, radius, BufferMode::Count);
  const auto wsum =
      georf::buffer_aggregate(layer, centers, radius, BufferMode::WeightSum);
  const auto wmean =
      georf::buffer_aggregate(layer, centers, radius, BufferMode::WeightMean);

  for (std::size_t c = 0; c < centers.size(); ++c) {
    int n = 0;
    double sum = 0.0;
    for (const auto& f : layer.features) {
      const double d2 = georf::squared_distance(f.location, centers[c]);
      if (d2 <= radius * radius) {
        ++n;
        sum += f.weight;
      }
    }
    CHECK(count.values[c] == static_cast<double>(n));
    CHECK(wsum.values[c] == doctest::Approx(sum).epsilon(1e-12));
    CHECK(count.empty_buffer[c] == (n == 0));
    if (n == 0) {
      CHECK(wmean.values[c] == 0.0);
      CHECK(wmean.empty_buffer[c]);
    } else {
      CHECK(wmean.values[c] == doctest::Approx(sum / n).epsilon(1e-12));
      CHECK_FALSE(wmean.empty_buffer[c]);
    }
  }

  const auto serial = georf::buffer_aggregate(layer, centers, radius,
                                              BufferMode::WeightSum, Exec::Serial);
  CHECK(serial.values == wsum.values);
}

TEST_CASE("buffer boundary points are inside") {
  GeoLayer layer;
  layer.features.push_back({{100.0, 0.0}, 2.5, ""});
  const std::vector<Point> center{{0.0, 0.0}};
  CHECK(georf::buffer_aggregate(layer, center, 100.0, BufferMode::Count)
            .values[0] == 1.0);
  CHECK(georf::buffer_aggregate(layer, center, 99.999, BufferMode::Count)
            .values[0] == 0.0);
}

TEST_CASE("point_in_polygon handles convex concave and holed rings") {
  const Polygon square{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  CHECK(georf::point_in_polygon({5, 5}, {&square, 1}));
  CHECK_FALSE(georf::point_in_polygon({15, 5}, {&square, 1}));
  CHECK_FALSE(georf::point_in_polygon({-1, -1}, {&square, 1}));

  // C shape: the notch on the right is outside.
  const Polygon cshape{{0, 0}, {10, 0}, {10, 3}, {4, 3},
                       {4, 7}, {10, 7}, {10, 10}, {0, 10}};
  CHECK(georf::point_in_polygon({2, 5}, {&cshape, 1}));
  CHECK(georf::point_in_polygon({8, 1}, {&cshape, 1}));
  CHECK_FALSE(georf::point_in_polygon({8, 5}, {&cshape, 1}));

  // Even-odd: a second ring inside the first acts as a hole.
  const std::vector<Polygon> holed{
      {{0, 0}, {10, 0}, {10, 10}, {0, 10}},
      {{4, 4}, {6, 4}, {6, 6}, {4, 6}},
  };
  CHECK(georf::point_in_polygon({2, 2}, holed));
  CHECK_FALSE(georf::point_in_polygon({5, 5}, holed));

  // Winding direction does not matter for even-odd tests.
  const Polygon reversed{{0, 10}, {10, 10}, {10, 0}, {0, 0}};
  CHECK(georf::point_in_polygon({5, 5}, {&reversed, 1}));
}

TEST_CASE("point_in_polygon agrees with a high sample count area estimate") {
  // Monte Carlo area of the C shape above: 10x10 minus the 6x4 notch = 76.
  const Polygon cshape{{0, 0}, {10, 0}, {10, 3}, {4, 3},
                       {4, 7}, {10, 7}, {10, 10}, {0, 10}};
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> real(0.0, 10.0);
  int inside = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i)
    inside += georf::point_in_polygon({real(rng), real(rng)}, {&cshape, 1});
  CHECK(100.0 * inside / n == doctest::Approx(76.0).epsilon(0.02));
}

TEST_CASE("make_grid count formula and layout") {
  const auto grid = georf::make_grid(Point{0, 0}, Point{10, 10}, 5.0);
  CHECK(grid.nu == 3);
  CHECK(grid.nv == 3);
  REQUIRE(grid.cells.size() == 9);
  // Row major from the origin.
  CHECK(grid.cells[0].u == 0.0);
  CHECK(grid.cells[0].v == 0.0);
  CHECK(grid.cells[1].u == 5.0);
  CHECK(grid.cells[1].v == 0.0);
  CHECK(grid.cells[3].u == 0.0);
  CHECK(grid.cells[3].v == 5.0);
  CHECK(grid.cells[8].u == 10.0);
  CHECK(grid.cells[8].v == 10.0);

  // A zero-extent box still has its single origin cell.
  const auto dot = georf::make_grid(Point{3, 4}, Point{3, 4}, 100.0);
  CHECK(dot.cells.size() == 1);
  CHECK(dot.cells[0].u == 3.0);

  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> real(-500.0, 500.0);
  std::uniform_real_distribution<double> span(0.0, 800.0);
  std::uniform_real_distribution<double> step(1.0, 120.0);
  for (int rep = 0; rep < 100; ++rep) {
    const Point lo{real(rng), real(rng)};
    const Point hi{lo.u + span(rng), lo.v + span(rng)};
    const double spacing = step(rng);
    const auto g = georf::make_grid(lo, hi, spacing);
    CHECK(g.nu == static_cast<std::size_t>(
                      std::floor((hi.u - lo.u) / spacing + 1.0)));
    CHECK(g.nv == static_cast<std::size_t>(
                      std::floor((hi.v - lo.v) / spacing + 1.0)));
    CHECK(g.cells.size() == g.nu * g.nv);
    for (const auto& cell : g.cells) {
      CHECK(cell.u <= hi.u + 1e-9);
      CHECK(cell.v <= hi.v + 1e-9);
    }
  }

  CHECK_THROWS_WITH(georf::make_grid(Point{1, 0}, Point{0, 1}, 1.0),
                    "make_grid: degenerate bbox");
  CHECK_THROWS_WITH(
      georf::make_grid(Point{0, 0}, Point{std::nan(""), 1}, 1.0),
      "make_grid: degenerate bbox");
  CHECK_THROWS_WITH(georf::make_grid(Point{0, 0}, Point{1, 1}, 0.0),
                    "make_grid: spacing <= 0");
}

TEST_CASE("boundary grids keep only interior cells") {
  // Right triangle over half the unit square: about half the cells stay.
  const std::vector<Polygon> triangle{{{0, 0}, {100, 0}, {0, 100}}};
  const auto grid = georf::make_grid(triangle, 10.0);
  CHECK(grid.nu == 11);
  CHECK(grid.nv == 11);
  CHECK(grid.cells.size() < 121u);
  for (const auto& cell : grid.cells)
    CHECK(georf::point_in_polygon(cell, triangle));
  // Count oracle: rerun the full lattice through the point test.
  const auto full = georf::make_grid(Point{0, 0}, Point{100, 100}, 10.0);
  std::size_t inside = 0;
  for (const auto& cell : full.cells)
    inside += georf::point_in_polygon(cell, triangle) ? 1 : 0;
  CHECK(grid.cells.size() == inside);
}

TEST_CASE("idw interpolates by inverse distance powers") {
  const std::vector<Point> pts{{0, 0}, {10, 0}, {0, 10}};
  const georf::SpatialIndex index(pts);
  const std::vector<double> values{1.0, 5.0, 9.0};

  // Exact hits return the sample value itself.
  CHECK(georf::idw(index, values, {10, 0}, 2.0, 0) == 5.0);

  // Hand computed two-neighbor weighting at (5,0): d=5 each, mean of 1,5.
  CHECK(georf::idw(index, values, {5, 0}, 2.0, 2) == doctest::Approx(3.0));

  // Full formula check against a direct evaluation.
  const Point q{3.0, 4.0};
  double wsum = 0, acc = 0;
  for (int i = 0; i < 3; ++i) {
    const double d = std::sqrt(georf::squared_distance(q, pts[i]));
    const double w = std::pow(d, -1.7);
    wsum += w;
    acc += w * values[i];
  }
  CHECK(georf::idw(index, values, q, 1.7, 0) ==
        doctest::Approx(acc / wsum).epsilon(1e-12));

  // k limits the neighborhood to the nearest points.
  const double k1 = georf::idw(index, values, {1, 0}, 2.0, 1);
  CHECK(k1 == 1.0);
}

TEST_CASE("idw_smooth excludes the point itself") {
  const std::vector<Point> pts{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  const georf::SpatialIndex index(pts);
  const std::vector<double> values{0.0, 10.0, 20.0, 30.0};
  const auto smoothed = georf::idw_smooth(index, values, 2.0, 2);
  REQUIRE(smoothed.size() == 4);
  // Point 0 sees points 1 and 2: weights 1 and 1/4.
  CHECK(smoothed[0] == doctest::Approx((10.0 + 20.0 / 4) / 1.25).epsilon(1e-12));
  // Interior point 1 sees its two unit-distance neighbors equally.
  CHECK(smoothed[1] == doctest::Approx((0.0 + 20.0) / 2).epsilon(1e-12));
  // A coincident neighbor short-circuits to its value.
  const georf::SpatialIndex dup(std::vector<Point>{{0, 0}, {0, 0}, {5, 5}});
  const std::vector<double> dv{1.0, 2.0, 3.0};
  CHECK(georf::idw_smooth(dup, dv, 2.0, 2)[0] == 2.0);

  const auto serial = georf::idw_smooth(index, values, 2.0, 2, Exec::Serial);
  CHECK(serial == smoothed);
}

TEST_CASE("kde matches the direct kernel sum and integrates to one") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(400.0, 600.0);
  std::vector<Point> pts;
  for (int i = 0; i < 40; ++i) pts.push_back({coord(rng), coord(rng)});
  const double h = 25.0;

  const auto grid = georf::make_grid(Point{0, 0}, Point{1000, 1000}, 10.0);
  const auto density = georf::kde(pts, h, grid);
  REQUIRE(density.size() == grid.cells.size());

  for (std::size_t c = 0; c < grid.cells.size(); c += 997) {
    double s = 0;
    for (const auto& p : pts)
      s += std::exp(-georf::squared_distance(grid.cells[c], p) / (2 * h * h));
    s /= 2 * std::numbers::pi * h * h * pts.size();
    CHECK(density[c] == doctest::Approx(s).epsilon(1e-12));
  }

  // Discrete integral over a grid that contains all the mass.
  double integral = 0;
  for (double d : density) integral += d * 10.0 * 10.0;
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));

  // No points: all-zero surface. Bad bandwidth: error.
  const auto flat = georf::kde({}, h, grid);
  for (double d : flat) CHECK(d == 0.0);
  CHECK_THROWS_WITH(georf::kde(pts, 0.0, grid), "kde: bandwidth <= 0");

  const auto serial = georf::kde(pts, h, grid, Exec::Serial);
  CHECK(serial == density);
}

}  // TEST_SUITE
