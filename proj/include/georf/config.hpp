#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "georf/event.hpp"
#include "georf/geo_features.hpp"
#include "georf/geo_forest.hpp"

namespace georf {

inline constexpr int kConfigSchemaVersion = 1;

struct LayerSpec {
  std::string name;
  std::string path;  // .csv or .geojson, resolved against the config file
  BufferMode mode = BufferMode::Count;
  // When non-empty, one feature column per listed category instead of one
  // per layer. Categories are declared here, never sniffed from the data, so
  // the output schema is a function of the config alone.
  std::vector<std::string> categories;
};

struct PipelineConfig {
  std::string events_path;
  std::string boundary_path;  // optional; empty falls back to the events bbox
  std::string output_dir = ".";
  std::vector<LayerSpec> layers;

  double buffer_radius_m = 400.0;
  double grid_spacing_m = 100.0;
  std::vector<Severity> severity_high = {Severity::Moderate, Severity::Major};

  double p_max = 0.2;
  double vif_max = 10.0;

  bool smote_enabled = true;
  int smote_k = 5;

  double test_fraction = 0.2;
  std::uint64_t split_seed = 13;

  double threshold = 0.5;
  GrfHyperParams hyper;

  double idw_power = 2.0;
  int idw_k = 12;
};

// Relative paths inside the file resolve against its parent directory.
PipelineConfig read_config(const std::string& path);
void write_config(const PipelineConfig& config, const std::string& path);

}  // namespace georf
