#pragma once

#include "demandcast/config.hpp"

#include <string>

namespace demandcast::cli {

// Subcommand bodies; each returns a process exit status and writes its
// artifacts under cfg.out_dir. main() owns flag parsing and config loading.

int cmd_ingest(const RunConfig& cfg, const std::string& log_csv_path,
               const std::string& out_panel_csv);

int cmd_synth(const RunConfig& cfg, const std::string& out_panel_csv);

int cmd_backtest(const RunConfig& cfg, const std::string& panel_csv_path);

int cmd_forecast(const RunConfig& cfg, const std::string& panel_csv_path);

// Scans <forecasts_dir>/<origin>/<model>/<key>.csv and writes one SVG per
// (origin, key) under <out>/plots.
int cmd_plot(const RunConfig& cfg, const std::string& forecasts_dir);

// Recomputes the Table-1 summary from a records CSV.
int cmd_report(const RunConfig& cfg, const std::string& records_csv_path);

} // namespace demandcast::cli
