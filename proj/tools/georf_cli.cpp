#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "georf/pipeline.hpp"

namespace {

std::string opt(const std::optional<double>& v) {
  return v ? georf::format_number(*v) : std::string("-");
}

void print_metrics(const georf::ConfusionMatrix& cm, const georf::Metrics& m,
                   std::optional<double> r2, std::optional<double> r2_global) {
  std::cout << "confusion tp=" << cm.tp << " fp=" << cm.fp << " tn=" << cm.tn
            << " fn=" << cm.fn << '\n'
            << "accuracy=" << opt(m.accuracy) << " precision=" << opt(m.precision)
            << " recall=" << opt(m.recall) << '\n'
            << "r2=" << opt(r2) << " r2_global=" << opt(r2_global) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geographical random forest pipeline"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "cap OpenMP worker threads");

  std::string config_path;
  bool serial = false;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "pipeline config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_flag("--serial", serial, "run single-threaded reference kernels");
    return cmd;
  };

  auto* featurize = add_common(
      app.add_subcommand("featurize", "buffer features for every event"));
  auto* select = add_common(
      app.add_subcommand("select", "rank-sum and collinearity screening"));
  auto* train =
      add_common(app.add_subcommand("train", "fit and save the blended model"));

  auto* sweep = add_common(
      app.add_subcommand("sweep", "test metrics across localization weights"));
  std::vector<double> a_values = {0.01, 0.16, 0.25, 0.5, 0.75, 0.99};
  sweep->add_option("--a", a_values, "local weights to evaluate")
      ->delimiter(',');

  auto* riskmap = add_common(
      app.add_subcommand("riskmap", "predict risk over the boundary grid"));
  bool smooth = false;
  riskmap->add_flag("--smooth", smooth, "inverse-distance smooth the surface");

  auto* importance = add_common(
      app.add_subcommand("importance", "global forest feature importance"));
  std::string cells_csv;
  importance->add_option("--cells", cells_csv,
                         "risk_cells.csv for zone association tests");

  auto* density = add_common(
      app.add_subcommand("density", "event kernel density over the grid"));
  double bandwidth = 0.0;
  density->add_option("--bandwidth", bandwidth, "kernel bandwidth in meters")
      ->required()
      ->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "generate a synthetic scenario");
  georf::SynthConfig synth_config;
  std::string out_dir;
  std::uint64_t synth_seed = 7;
  std::string scenario = "heterogeneous";
  synth->add_option("--out", out_dir, "scenario directory")->required();
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--events", synth_config.n_events, "number of events");
  synth->add_option("--regions", synth_config.n_regions, "number of regions");
  synth->add_option("--layers", synth_config.n_layers, "number of layers");
  synth->add_option("--imbalance", synth_config.imbalance_high,
                    "target high-severity fraction");
  synth->add_option("--local-signal", synth_config.local_signal,
                    "region-flipped coefficient magnitude");
  synth->add_option("--global-signal", synth_config.global_signal,
                    "shared coefficient magnitude");
  synth->add_option("--scenario", scenario, "heterogeneous or homogeneous")
      ->check(CLI::IsMember({"heterogeneous", "homogeneous"}));

  CLI11_PARSE(app, argc, argv);
  georf::set_max_threads(threads);
  const auto exec = serial ? georf::Exec::Serial : georf::Exec::Parallel;

  try {
    if (app.got_subcommand(synth)) {
      synth_config.heterogeneous = scenario == "heterogeneous";
      const auto result = georf::run_synth(synth_config, synth_seed, out_dir);
      std::cout << out_dir << ": " << result.events.size() << " events, "
                << result.layers.size() << " layers\n";
      return 0;
    }

    const auto config = georf::read_config(config_path);
    if (app.got_subcommand(featurize)) {
      const auto table = georf::run_featurize(config, exec);
      std::cout << georf::artifact_path(config, "features.csv") << ": "
                << table.ids.size() << " rows, " << table.features.names.size()
                << " columns\n";
    } else if (app.got_subcommand(select)) {
      const auto report = georf::run_select(config, exec);
      std::size_t kept = 0;
      for (const auto& row : report.rows) kept += row.selected ? 1 : 0;
      std::cout << georf::artifact_path(config, "selection.csv") << ": kept "
                << kept << " of " << report.rows.size() << " features\n";
    } else if (app.got_subcommand(train)) {
      const auto out = georf::run_train(config, exec);
      std::cout << georf::artifact_path(config, "model.json") << ": trained on "
                << out.train_rows.size() << " rows (+" << out.smote_added
                << " synthetic), tested on " << out.test_rows.size() << '\n';
      print_metrics(out.cm, out.test_metrics, out.r2, out.r2_global);
    } else if (app.got_subcommand(sweep)) {
      const auto rows = georf::run_sweep(config, a_values, exec);
      for (const auto& row : rows) {
        std::cout << "a=" << georf::format_number(row.a)
                  << " r2=" << georf::format_number(row.r2)
                  << " accuracy=" << opt(row.accuracy)
                  << " precision=" << opt(row.precision)
                  << " recall=" << opt(row.recall);
        if (!row.remarks.empty()) std::cout << "  [" << row.remarks << ']';
        std::cout << '\n';
      }
      std::cout << georf::artifact_path(config, "sweep.csv") << ": "
                << rows.size() << " rows\n";
    } else if (app.got_subcommand(riskmap)) {
      const auto out = georf::run_riskmap(config, smooth, exec);
      std::cout << georf::artifact_path(config, "risk.geojson") << ": "
                << out.grid.nu << "x" << out.grid.nv << " grid, "
                << out.risk.size() << " cells\n";
    } else if (app.got_subcommand(importance)) {
      const auto rows = georf::run_importance(config, cells_csv);
      for (const auto& row : rows)
        std::cout << row.feature << ' ' << georf::format_number(row.importance)
                  << '\n';
      std::cout << georf::artifact_path(config, "importance.csv") << ": "
                << rows.size() << " features\n";
    } else if (app.got_subcommand(density)) {
      const auto values = georf::run_density(config, bandwidth, exec);
      std::cout << georf::artifact_path(config, "density.geojson") << ": "
                << values.size() << " cells\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "georf: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
