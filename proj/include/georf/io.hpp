#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "georf/eval.hpp"
#include "georf/event.hpp"
#include "georf/geo_features.hpp"
#include "georf/preprocess.hpp"

namespace georf {

// Shortest decimal form that parses back to the same double.
std::string format_number(double v);

// ---- events ----

// Columns id,u,v,severity. severity_binary is assigned from the high set.
std::vector<EventRecord> read_events_csv(const std::string& path,
                                         std::span<const Severity> high);
void write_events_csv(const std::string& path,
                      std::span<const EventRecord> events);

// ---- layers ----

// Header-driven columns u,v[,weight][,category].
GeoLayer read_layer_csv(const std::string& path, const std::string& name);
// Point features of a GeoJSON FeatureCollection; properties weight and
// category are honored when present.
GeoLayer read_layer_geojson(const std::string& path, const std::string& name);
void write_layer_csv(const std::string& path, const GeoLayer& layer);

// ---- boundary ----

// Polygon/MultiPolygon rings of a GeoJSON document, coordinates in meters.
std::vector<Polygon> read_boundary_geojson(const std::string& path);
void write_boundary_geojson(const std::string& path,
                            std::span<const Polygon> rings);

// ---- feature table ----

struct FeatureTable {
  std::vector<std::int64_t> ids;
  std::vector<Point> locations;
  std::vector<int> labels;
  FeatureMatrix features;
};

void write_feature_table(const std::string& path, const FeatureTable& table);
FeatureTable read_feature_table(const std::string& path);

// ---- selection artifacts ----

void write_selection_csv(const std::string& path, const SelectionReport& report);
void write_manifest(const std::string& path, std::span<const std::string> names);
std::vector<std::string> read_manifest(const std::string& path);

// ---- evaluation artifacts ----

void write_metrics_csv(const std::string& path, const ConfusionMatrix& cm,
                       const Metrics& m, std::optional<double> r2,
                       std::optional<double> r2_global);
void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows);

// ---- risk surfaces ----

// One point feature per cell carrying a single numeric property; decimals <
// 0 prints the shortest round-trip form.
void write_point_surface_geojson(const std::string& path,
                                 std::span<const Point> cells,
                                 std::span<const double> values,
                                 const std::string& property, int decimals);
// Risk specialization, property risk printed at 6 decimal places.
void write_risk_geojson(const std::string& path, std::span<const Point> cells,
                        std::span<const double> risk);
// Cell coordinates, feature columns, and risk; importance joins on this.
void write_cells_csv(const std::string& path, std::span<const Point> cells,
                     const FeatureMatrix& features, std::span<const double> risk);
struct CellTable {
  std::vector<Point> cells;
  FeatureMatrix features;
  std::vector<double> risk;
};
CellTable read_cells_csv(const std::string& path);

struct ImportanceRow {
  std::string feature;
  double importance = 0.0;
  // Zone association, present when a cell table was supplied.
  std::optional<WelchResult> zone_test;
};
void write_importance_csv(const std::string& path,
                          std::span<const ImportanceRow> rows);

}  // namespace georf
