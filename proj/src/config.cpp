#include "georf/config.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "georf/io.hpp"

namespace georf {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string mode_name(BufferMode mode) {
  switch (mode) {
    case BufferMode::Count: return "count";
    case BufferMode::WeightSum: return "weight_sum";
    default: return "weight_mean";
  }
}

BufferMode parse_mode(const std::string& text) {
  if (text == "count") return BufferMode::Count;
  if (text == "weight_sum") return BufferMode::WeightSum;
  if (text == "weight_mean") return BufferMode::WeightMean;
  throw std::runtime_error("config: unknown buffer mode '" + text + "'");
}

std::string resolve(const fs::path& base, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (base / p).lexically_normal().string();
}

}  // namespace

PipelineConfig read_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open " + path);
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }

  if (doc.value("schema_version", 0) != kConfigSchemaVersion)
    throw std::runtime_error(path + ": unsupported schema_version");

  const fs::path base = fs::path(path).parent_path();
  PipelineConfig config;
  try {
    const auto& paths = doc.at("paths");
    config.events_path = resolve(base, paths.at("events").get<std::string>());
    config.boundary_path = resolve(base, paths.value("boundary", ""));
    config.output_dir = resolve(base, paths.value("output_dir", "."));

    for (const auto& layer : doc.at("layers")) {
      LayerSpec spec;
      spec.name = layer.at("name").get<std::string>();
      spec.path = resolve(base, layer.at("path").get<std::string>());
      spec.mode = parse_mode(layer.value("mode", "count"));
      if (layer.contains("categories"))
        for (const auto& c : layer["categories"])
          spec.categories.push_back(c.get<std::string>());
      config.layers.push_back(std::move(spec));
    }

    config.buffer_radius_m = doc.value("buffer_radius_m", 400.0);
    config.grid_spacing_m = doc.value("grid_spacing_m", 100.0);

    if (doc.contains("severity_high")) {
      config.severity_high.clear();
      for (const auto& s : doc["severity_high"]) {
        const auto sev = parse_severity(s.get<std::string>());
        if (!sev)
          throw std::runtime_error("unknown severity '" + s.get<std::string>() + "'");
        config.severity_high.push_back(*sev);
      }
    }

    if (doc.contains("selection")) {
      config.p_max = doc["selection"].value("p_max", 0.2);
      config.vif_max = doc["selection"].value("vif_max", 10.0);
    }
    if (doc.contains("smote")) {
      config.smote_enabled = doc["smote"].value("enabled", true);
      config.smote_k = doc["smote"].value("k_neighbors", 5);
    }
    if (doc.contains("split")) {
      config.test_fraction = doc["split"].value("test_fraction", 0.2);
      config.split_seed = doc["split"].value("seed", std::uint64_t{13});
    }
    config.threshold = doc.value("threshold", 0.5);

    if (doc.contains("hyper")) {
      const auto& hyper = doc["hyper"];
      config.hyper.bandwidth_n = hyper.value("bandwidth_n", 100);
      config.hyper.local_weight_a = hyper.value("local_weight_a", 0.5);
      config.hyper.local_mixing_k = hyper.value("local_mixing_k", 1);
      if (hyper.contains("forest_params")) {
        const auto& fp = hyper["forest_params"];
        config.hyper.forest_params.b_trees = fp.value("b_trees", 100);
        config.hyper.forest_params.mtry = fp.value("mtry", 0);
        config.hyper.forest_params.min_leaf = fp.value("min_leaf", 1);
        config.hyper.forest_params.max_depth = fp.value("max_depth", 0);
        config.hyper.forest_params.seed = fp.value("seed", std::uint64_t{0});
      }
    }
    if (doc.contains("idw")) {
      config.idw_power = doc["idw"].value("power", 2.0);
      config.idw_k = doc["idw"].value("k", 12);
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }

  if (config.events_path.empty())
    throw std::runtime_error(path + ": paths.events is required");
  return config;
}

void write_config(const PipelineConfig& config, const std::string& path) {
  json doc;
  doc["schema_version"] = kConfigSchemaVersion;
  doc["paths"]["events"] = config.events_path;
  if (!config.boundary_path.empty())
    doc["paths"]["boundary"] = config.boundary_path;
  doc["paths"]["output_dir"] = config.output_dir;

  doc["layers"] = json::array();
  for (const auto& layer : config.layers) {
    json spec;
    spec["name"] = layer.name;
    spec["path"] = layer.path;
    spec["mode"] = mode_name(layer.mode);
    if (!layer.categories.empty()) spec["categories"] = layer.categories;
    doc["layers"].push_back(std::move(spec));
  }

  doc["buffer_radius_m"] = config.buffer_radius_m;
  doc["grid_spacing_m"] = config.grid_spacing_m;
  doc["severity_high"] = json::array();
  for (auto s : config.severity_high)
    doc["severity_high"].push_back(to_string(s));
  doc["selection"]["p_max"] = config.p_max;
  doc["selection"]["vif_max"] = config.vif_max;
  doc["smote"]["enabled"] = config.smote_enabled;
  doc["smote"]["k_neighbors"] = config.smote_k;
  doc["split"]["test_fraction"] = config.test_fraction;
  doc["split"]["seed"] = config.split_seed;
  doc["threshold"] = config.threshold;
  doc["hyper"]["bandwidth_n"] = config.hyper.bandwidth_n;
  doc["hyper"]["local_weight_a"] = config.hyper.local_weight_a;
  doc["hyper"]["local_mixing_k"] = config.hyper.local_mixing_k;
  doc["hyper"]["forest_params"]["b_trees"] = config.hyper.forest_params.b_trees;
  doc["hyper"]["forest_params"]["mtry"] = config.hyper.forest_params.mtry;
  doc["hyper"]["forest_params"]["min_leaf"] = config.hyper.forest_params.min_leaf;
  doc["hyper"]["forest_params"]["max_depth"] = config.hyper.forest_params.max_depth;
  doc["hyper"]["forest_params"]["seed"] = config.hyper.forest_params.seed;
  doc["idw"]["power"] = config.idw_power;
  doc["idw"]["k"] = config.idw_k;

  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  file << doc.dump(2) << '\n';
  file.flush();
  if (!file) throw std::runtime_error("write failed for " + path);
}

}  // namespace georf
