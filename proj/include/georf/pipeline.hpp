#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "georf/config.hpp"
#include "georf/eval.hpp"
#include "georf/io.hpp"
#include "georf/synth.hpp"

namespace georf {

// Commands exchange state only through files under config.output_dir; each
// run_* both returns its result and persists the named artifacts.
std::string artifact_path(const PipelineConfig& config, const std::string& name);

// features.csv: one row per event with every configured buffer column.
FeatureTable run_featurize(const PipelineConfig& config,
                           Exec exec = Exec::Parallel);

// selection.csv + selected_features.txt from the feature table.
SelectionReport run_select(const PipelineConfig& config,
                           Exec exec = Exec::Parallel);

struct TrainOutput {
  std::vector<std::int32_t> train_rows;  // feature-table row indices
  std::vector<std::int32_t> test_rows;
  Scaler scaler;                 // fit on the training rows only
  std::size_t smote_added = 0;   // synthetic rows appended after the split
  ConfusionMatrix cm;
  Metrics test_metrics;
  std::optional<double> r2;
  std::optional<double> r2_global;
};

// model.json + metrics.csv. Split first; standardization and SMOTE never see
// a test row.
TrainOutput run_train(const PipelineConfig& config, Exec exec = Exec::Parallel);

// sweep.csv over the requested localization weights.
std::vector<SweepRow> run_sweep(const PipelineConfig& config,
                                std::span<const double> a_values,
                                Exec exec = Exec::Parallel);

struct RiskmapOutput {
  RiskGrid grid;
  FeatureMatrix cell_features;  // raw buffer values per cell
  std::vector<double> risk;
  std::size_t imputed = 0;  // empty-buffer mean cells set to the training mean
};

// risk.geojson + risk_cells.csv from the saved model.
RiskmapOutput run_riskmap(const PipelineConfig& config, bool smooth,
                          Exec exec = Exec::Parallel);

// importance.csv; pass a risk_cells.csv path to join zone-association tests.
std::vector<ImportanceRow> run_importance(const PipelineConfig& config,
                                          const std::string& cells_csv = "");

// events.csv, layers/, boundary.geojson, truth.csv, truth_model.json, and a
// ready-to-run config.json inside out_dir.
SynthResult run_synth(const SynthConfig& synth, std::uint64_t seed,
                      const std::string& out_dir);

// density.geojson: event KDE over the prediction grid.
std::vector<double> run_density(const PipelineConfig& config, double bandwidth,
                                Exec exec = Exec::Parallel);

}  // namespace georf
