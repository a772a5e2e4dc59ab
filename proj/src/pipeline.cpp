#include "georf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "georf/model_io.hpp"
#include "georf/preprocess.hpp"
#include "georf/rng.hpp"

namespace georf {

namespace fs = std::filesystem;

namespace {

// Seed stream for the SMOTE pass, shared with eval so a single training run
// and a sweep row at the same a agree bit for bit.
constexpr std::uint64_t kSmoteStream = 0x534d4f54;

std::string mode_suffix(BufferMode mode) {
  switch (mode) {
    case BufferMode::Count: return "count";
    case BufferMode::WeightSum: return "wsum";
    default: return "wmean";
  }
}

// One materialized layer per output column; category columns hold the
// filtered subset so aggregation code never branches on categories.
struct FeatureColumns {
  std::vector<std::string> names;
  std::vector<GeoLayer> layers;
  std::vector<BufferMode> modes;
};

FeatureColumns load_feature_columns(const PipelineConfig& config) {
  FeatureColumns columns;
  for (const auto& spec : config.layers) {
    GeoLayer layer;
    if (spec.path.ends_with(".geojson") || spec.path.ends_with(".json"))
      layer = read_layer_geojson(spec.path, spec.name);
    else
      layer = read_layer_csv(spec.path, spec.name);

    if (spec.categories.empty()) {
      columns.names.push_back(spec.name + "_" + mode_suffix(spec.mode));
      columns.modes.push_back(spec.mode);
      columns.layers.push_back(std::move(layer));
      continue;
    }
    for (const auto& category : spec.categories) {
      GeoLayer filtered;
      filtered.name = layer.name + "_" + category;
      for (const auto& f : layer.features)
        if (f.category == category) filtered.features.push_back(f);
      columns.names.push_back(spec.name + "_" + category + "_" +
                              mode_suffix(spec.mode));
      columns.modes.push_back(spec.mode);
      columns.layers.push_back(std::move(filtered));
    }
  }
  return columns;
}

struct Featurized {
  FeatureMatrix matrix;
  // Per column, per center: buffer was empty. Consulted for mean columns.
  std::vector<std::vector<std::uint8_t>> empty;
};

Featurized featurize_centers(const FeatureColumns& columns,
                             std::span<const Point> centers, double radius,
                             Exec exec) {
  Featurized out;
  out.matrix.names = columns.names;
  out.matrix.rows.assign(centers.size(),
                         std::vector<double>(columns.names.size(), 0.0));
  out.empty.resize(columns.names.size());
  for (std::size_t c = 0; c < columns.names.size(); ++c) {
    auto agg = buffer_aggregate(columns.layers[c], centers, radius,
                                columns.modes[c], exec);
    for (std::size_t i = 0; i < centers.size(); ++i)
      out.matrix.rows[i][c] = agg.values[i];
    out.empty[c] = std::move(agg.empty_buffer);
  }
  return out;
}

std::vector<Polygon> load_boundary_or_bbox(const PipelineConfig& config) {
  if (!config.boundary_path.empty())
    return read_boundary_geojson(config.boundary_path);
  std::cerr << "warning: no boundary configured; using the events bounding box\n";
  const auto events = read_events_csv(config.events_path, config.severity_high);
  if (events.empty()) throw std::runtime_error("no events for bbox fallback");
  Point lo{std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Point hi{-lo.u, -lo.v};
  for (const auto& e : events) {
    lo.u = std::min(lo.u, e.location.u);
    lo.v = std::min(lo.v, e.location.v);
    hi.u = std::max(hi.u, e.location.u);
    hi.v = std::max(hi.v, e.location.v);
  }
  return {{{lo.u, lo.v}, {hi.u, lo.v}, {hi.u, hi.v}, {lo.u, hi.v}}};
}

struct SelectedColumns {
  std::vector<std::size_t> indices;  // into the feature table columns
  std::vector<std::string> names;
};

SelectedColumns resolve_manifest(const FeatureTable& table,
                                 const std::vector<std::string>& manifest) {
  SelectedColumns out;
  for (const auto& name : manifest) {
    const auto it = std::find(table.features.names.begin(),
                              table.features.names.end(), name);
    if (it == table.features.names.end())
      throw std::runtime_error("manifest feature '" + name +
                               "' is not in the feature table");
    out.indices.push_back(
        static_cast<std::size_t>(it - table.features.names.begin()));
    out.names.push_back(name);
  }
  return out;
}

Dataset dataset_from_table(const FeatureTable& table,
                           const SelectedColumns& selected) {
  Dataset samples;
  samples.reserve(table.ids.size());
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    LabeledSample s;
    s.location = table.locations[i];
    s.label = table.labels[i];
    s.features.reserve(selected.indices.size());
    for (auto c : selected.indices) s.features.push_back(table.features.rows[i][c]);
    samples.push_back(std::move(s));
  }
  return samples;
}

void ensure_output_dir(const PipelineConfig& config) {
  fs::create_directories(config.output_dir);
}

}  // namespace

std::string artifact_path(const PipelineConfig& config, const std::string& name) {
  return (fs::path(config.output_dir) / name).string();
}

FeatureTable run_featurize(const PipelineConfig& config, Exec exec) {
  const auto events = read_events_csv(config.events_path, config.severity_high);
  if (events.empty()) throw std::runtime_error("no events to featurize");

  std::vector<Point> centers;
  centers.reserve(events.size());
  FeatureTable table;
  for (const auto& e : events) {
    centers.push_back(e.location);
    table.ids.push_back(e.id);
    table.locations.push_back(e.location);
    table.labels.push_back(e.severity_binary);
  }

  const auto columns = load_feature_columns(config);
  table.features =
      featurize_centers(columns, centers, config.buffer_radius_m, exec).matrix;

  ensure_output_dir(config);
  write_feature_table(artifact_path(config, "features.csv"), table);
  return table;
}

SelectionReport run_select(const PipelineConfig& config, Exec exec) {
  const auto table = read_feature_table(artifact_path(config, "features.csv"));
  const bool has0 = std::find(table.labels.begin(), table.labels.end(), 0) !=
                    table.labels.end();
  const bool has1 = std::find(table.labels.begin(), table.labels.end(), 1) !=
                    table.labels.end();
  if (!has0 || !has1)
    throw std::runtime_error(
        "feature table holds a single class; selection needs both");

  auto rows = screen_features(table.features, table.labels, exec);
  const auto report = select_features(std::move(rows), config.p_max, config.vif_max);

  write_selection_csv(artifact_path(config, "selection.csv"), report);
  std::vector<std::string> manifest;
  for (const auto& row : report.rows)
    if (row.selected) manifest.push_back(row.name);
  write_manifest(artifact_path(config, "selected_features.txt"), manifest);
  return report;
}

TrainOutput run_train(const PipelineConfig& config, Exec exec) {
  const auto table = read_feature_table(artifact_path(config, "features.csv"));
  const auto manifest =
      read_manifest(artifact_path(config, "selected_features.txt"));
  if (manifest.empty())
    throw std::runtime_error("selected-feature manifest is empty");
  const auto selected = resolve_manifest(table, manifest);
  const auto samples = dataset_from_table(table, selected);

  const auto split =
      stratified_split(table.labels, config.test_fraction, config.split_seed);

  TrainOutput out;
  out.train_rows = split.train;
  out.test_rows = split.test;

  std::vector<std::vector<double>> train_features;
  for (auto i : split.train) train_features.push_back(samples[i].features);
  out.scaler = zscore_fit(train_features);

  Dataset train;
  train.reserve(split.train.size());
  for (auto i : split.train) {
    auto s = samples[i];
    s.features = zscore_apply({s.features}, out.scaler).front();
    train.push_back(std::move(s));
  }
  if (config.smote_enabled) {
    const auto before = train.size();
    train = rebalance_with_smote(train, config.smote_k,
                                 mix_seed(config.split_seed, kSmoteStream));
    out.smote_added = train.size() - before;
  }

  if (config.hyper.bandwidth_n > static_cast<int>(train.size()))
    throw std::runtime_error(
        "bandwidth exceeds sample count; lower hyper.bandwidth_n below the "
        "post-split training size (" + std::to_string(train.size()) + ")");

  GrfModel model =
      fit_grf(train, config.hyper, config.hyper.forest_params.seed, exec);
  model.feature_names = selected.names;
  model.scaler = out.scaler;

  ensure_output_dir(config);
  save_model(model, artifact_path(config, "model.json"));

  std::vector<double> blended, global_pred, labels_real;
  std::vector<int> labels;
  for (auto i : split.test) {
    const auto z = zscore_apply({samples[i].features}, out.scaler).front();
    const auto detail = predict_detailed(model, z, samples[i].location);
    blended.push_back(detail.value);
    global_pred.push_back(detail.global);
    labels.push_back(samples[i].label);
    labels_real.push_back(static_cast<double>(samples[i].label));
  }
  out.cm = confusion(blended, labels, config.threshold);
  out.test_metrics = metrics(out.cm);
  out.r2 = r_squared(blended, labels_real);
  out.r2_global = r_squared(global_pred, labels_real);
  write_metrics_csv(artifact_path(config, "metrics.csv"), out.cm,
                    out.test_metrics, out.r2, out.r2_global);
  return out;
}

std::vector<SweepRow> run_sweep(const PipelineConfig& config,
                                std::span<const double> a_values, Exec exec) {
  const auto table = read_feature_table(artifact_path(config, "features.csv"));
  const auto manifest =
      read_manifest(artifact_path(config, "selected_features.txt"));
  if (manifest.empty())
    throw std::runtime_error("selected-feature manifest is empty");
  const auto selected = resolve_manifest(table, manifest);
  const auto samples = dataset_from_table(table, selected);

  SweepOptions options;
  options.test_fraction = config.test_fraction;
  options.use_smote = config.smote_enabled;
  options.smote_k = config.smote_k;
  options.threshold = config.threshold;
  const auto rows = sweep_localization(samples, config.hyper, a_values,
                                       config.split_seed, options, exec);
  ensure_output_dir(config);
  write_sweep_csv(artifact_path(config, "sweep.csv"), rows);
  return rows;
}

RiskmapOutput run_riskmap(const PipelineConfig& config, bool smooth, Exec exec) {
  const auto model = load_model(artifact_path(config, "model.json"));
  const auto boundary = load_boundary_or_bbox(config);

  RiskmapOutput out;
  out.grid = make_grid(boundary, config.grid_spacing_m);
  if (out.grid.cells.empty())
    throw std::runtime_error("prediction grid is empty; check the boundary");

  const auto columns = load_feature_columns(config);
  auto featurized = featurize_centers(columns, out.grid.cells,
                                      config.buffer_radius_m, exec);
  out.cell_features = std::move(featurized.matrix);

  std::vector<std::size_t> model_cols;
  for (const auto& name : model.feature_names) {
    const auto it = std::find(out.cell_features.names.begin(),
                              out.cell_features.names.end(), name);
    if (it == out.cell_features.names.end())
      throw std::runtime_error("model feature '" + name +
                               "' is not produced by this config");
    model_cols.push_back(
        static_cast<std::size_t>(it - out.cell_features.names.begin()));
  }

  const auto n_cells = out.grid.cells.size();
  out.risk.resize(n_cells);
  std::vector<std::size_t> imputed_per_cell(n_cells, 0);
  parallel_for(exec, static_cast<std::ptrdiff_t>(n_cells), [&](std::size_t i) {
    std::vector<double> z(model_cols.size());
    for (std::size_t j = 0; j < model_cols.size(); ++j) {
      const auto c = model_cols[j];
      const auto& st = model.scaler[j];
      // An empty buffer leaves a mean column undefined; such cells take the
      // training mean, which is 0 in standardized space.
      if (columns.modes[c] == BufferMode::WeightMean && featurized.empty[c][i]) {
        z[j] = 0.0;
        imputed_per_cell[i] += 1;
      } else {
        z[j] = st.constant ? 0.0
                           : (out.cell_features.rows[i][c] - st.mean) / st.sd;
      }
    }
    out.risk[i] = predict_detailed(model, z, out.grid.cells[i]).value;
  });
  for (auto c : imputed_per_cell) out.imputed += c;
  if (out.imputed > 0)
    std::cerr << "note: " << out.imputed
              << " empty-buffer mean values imputed to the training mean\n";

  if (smooth) {
    const SpatialIndex cell_index(out.grid.cells);
    out.risk = idw_smooth(cell_index, out.risk, config.idw_power, config.idw_k,
                          exec);
  }

  ensure_output_dir(config);
  write_risk_geojson(artifact_path(config, "risk.geojson"), out.grid.cells,
                     out.risk);
  write_cells_csv(artifact_path(config, "risk_cells.csv"), out.grid.cells,
                  out.cell_features, out.risk);
  return out;
}

std::vector<ImportanceRow> run_importance(const PipelineConfig& config,
                                          const std::string& cells_csv) {
  const auto model = load_model(artifact_path(config, "model.json"));
  const auto importance = feature_importance(model.global_forest);

  std::vector<ImportanceRow> rows;
  rows.reserve(importance.size());
  for (std::size_t j = 0; j < importance.size(); ++j) {
    ImportanceRow row;
    row.feature = model.feature_names[j];
    row.importance = importance[j];
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ImportanceRow& a, const ImportanceRow& b) {
                     return a.importance > b.importance;
                   });

  if (!cells_csv.empty()) {
    const auto cells = read_cells_csv(cells_csv);
    const auto tests =
        zone_association_ttest(cells.risk, cells.features, config.threshold);
    for (auto& row : rows)
      for (const auto& t : tests)
        if (t.feature == row.feature) row.zone_test = t.test;
  }

  ensure_output_dir(config);
  write_importance_csv(artifact_path(config, "importance.csv"), rows);
  return rows;
}

SynthResult run_synth(const SynthConfig& synth, std::uint64_t seed,
                      const std::string& out_dir) {
  auto result = generate_synthetic(synth, seed);
  fs::create_directories(fs::path(out_dir) / "layers");

  write_events_csv((fs::path(out_dir) / "events.csv").string(), result.events);
  std::vector<LayerSpec> specs;
  for (const auto& layer : result.layers) {
    const std::string rel = "layers/" + layer.name + ".csv";
    write_layer_csv((fs::path(out_dir) / rel).string(), layer);
    LayerSpec spec;
    spec.name = layer.name;
    spec.path = rel;
    spec.mode = BufferMode::Count;
    specs.push_back(std::move(spec));
  }
  const std::vector<Polygon> rings{result.boundary};
  write_boundary_geojson((fs::path(out_dir) / "boundary.geojson").string(),
                         rings);

  // Truth table: region, Bernoulli parameter, label, and the standardized
  // features the labels were drawn from.
  {
    std::ofstream file(fs::path(out_dir) / "truth.csv", std::ios::binary);
    if (!file) throw std::runtime_error("cannot write truth.csv");
    file << "id,region,p_high,label";
    for (const auto& name : result.truth.features_z.names) file << ',' << name;
    file << '\n';
    for (std::size_t i = 0; i < result.events.size(); ++i) {
      file << result.events[i].id << ',' << result.truth.region[i] << ','
           << format_number(result.truth.p_high[i]) << ','
           << result.events[i].severity_binary;
      for (double v : result.truth.features_z.rows[i])
        file << ',' << format_number(v);
      file << '\n';
    }
    if (!file.flush()) throw std::runtime_error("write failed for truth.csv");
  }
  {
    nlohmann::json doc;
    doc["scenario"] = synth.heterogeneous ? "heterogeneous" : "homogeneous";
    doc["local_signal"] = synth.local_signal;
    doc["global_signal"] = synth.global_signal;
    doc["global_features"] = result.truth.global_features;
    doc["regions"] = nlohmann::json::array();
    for (std::size_t r = 0; r < result.truth.local_feature.size(); ++r)
      doc["regions"].push_back({{"local_feature", result.truth.local_feature[r]},
                                {"local_sign", result.truth.local_sign[r]}});
    std::ofstream file(fs::path(out_dir) / "truth_model.json", std::ios::binary);
    if (!file) throw std::runtime_error("cannot write truth_model.json");
    file << doc.dump(2) << '\n';
    if (!file.flush())
      throw std::runtime_error("write failed for truth_model.json");
  }

  PipelineConfig config;
  config.events_path = "events.csv";
  config.boundary_path = "boundary.geojson";
  config.output_dir = "out";
  config.layers = std::move(specs);
  config.buffer_radius_m = synth.buffer_radius_m;
  config.grid_spacing_m = 200.0;
  config.hyper.bandwidth_n = 100;
  config.hyper.local_weight_a = 0.5;
  config.hyper.forest_params.b_trees = 100;
  config.hyper.forest_params.seed = 42;
  write_config(config, (fs::path(out_dir) / "config.json").string());
  return result;
}

std::vector<double> run_density(const PipelineConfig& config, double bandwidth,
                                Exec exec) {
  const auto events = read_events_csv(config.events_path, config.severity_high);
  if (events.empty()) throw std::runtime_error("no events for density");
  std::vector<Point> points;
  points.reserve(events.size());
  for (const auto& e : events) points.push_back(e.location);

  const auto boundary = load_boundary_or_bbox(config);
  const auto grid = make_grid(boundary, config.grid_spacing_m);
  const auto densities = kde(points, bandwidth, grid, exec);

  ensure_output_dir(config);
  write_point_surface_geojson(artifact_path(config, "density.geojson"),
                              grid.cells, densities, "density", -1);
  return densities;
}

}  // namespace georf
