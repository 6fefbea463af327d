#include "commands.hpp"

#include "demandcast/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using demandcast::RunConfig;

struct CommonFlags {
	std::string config_path;
	std::optional<std::uint64_t> seed;
	std::optional<std::size_t> jobs;
	std::optional<std::string> out;
	std::vector<std::string> models;
	std::vector<std::string> origins;
	std::optional<std::int64_t> horizon;
	bool exhaustive_arima = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
	cmd->add_option("--config", f.config_path, "JSON config file (defaults apply when omitted)");
	cmd->add_option("--seed", f.seed, "global seed (default 42)");
	cmd->add_option("--jobs", f.jobs, "worker count, 0 = available parallelism");
	cmd->add_option("--out", f.out, "output directory (default 'out')");
	cmd->add_option("--models", f.models,
	                "models to run: seasonal_naive sarima embed_nn deepar gp_copula")
	    ->delimiter(',');
	cmd->add_option("--origins", f.origins, "forecast origins (ISO dates)")->delimiter(',');
	cmd->add_option("--horizon", f.horizon, "forecast horizon in days (default 30)");
	cmd->add_flag("--exhaustive-arima", f.exhaustive_arima,
	              "search the full SARIMA order grid instead of the stepwise walk");
}

RunConfig resolve_config(const CommonFlags& f) {
	RunConfig cfg = f.config_path.empty() ? RunConfig{} : RunConfig::from_json_file(f.config_path);
	// flags win over the config file
	if (f.seed) cfg.seed = *f.seed;
	if (f.jobs) cfg.jobs = *f.jobs;
	if (f.out) cfg.out_dir = *f.out;
	if (!f.models.empty()) cfg.plan.models = f.models;
	if (!f.origins.empty()) {
		cfg.plan.origins.clear();
		for (const auto& o : f.origins) {
			cfg.plan.origins.push_back(demandcast::Date::parse(o));
		}
	}
	if (f.horizon) cfg.plan.horizon = *f.horizon;
	if (f.exhaustive_arima) cfg.plan.exhaustive_arima = true;
	return cfg;
}

} // namespace

int main(int argc, char** argv) {
	CLI::App app{"demandcast: panel count-series forecasting and rolling-origin backtesting"};
	app.require_subcommand(1);
	app.footer(
	    "Config file keys (JSON; unknown keys rejected; defaults in parentheses):\n"
	    "  seed (42), out (\"out\"), jobs (0 = all cores)\n"
	    "  synth:     n_professions (5), n_modules (10), days (625), start (2019-05-01),\n"
	    "             base_level (6.0), trend_per_day (0.0015), weekly_amplitude (0.35),\n"
	    "             shock_day (330), shock_multiplier (1.6), dispersion (0.25), seed (42)\n"
	    "  ingest:    utc_offset_minutes (0), calendar_start, calendar_end,\n"
	    "             trim_leading_zeros (false)\n"
	    "  backtest:  origins (2020-06-01..2020-12-01 month starts), horizon (30),\n"
	    "             season (7), validation_tail (30), models (all five),\n"
	    "             exhaustive_arima (false)\n"
	    "  embed_nn:  hidden ([1000, 500]), epochs (30), batch_size (256),\n"
	    "             learning_rate (0.001)\n"
	    "  deepar:    hidden_size (20), layers (2), dropout (0.01), epochs (300),\n"
	    "             batch_size (30), context_length (30), sample_paths (100),\n"
	    "             learning_rate (0.001)\n"
	    "  gp_copula: hidden_size (20), layers (2), dropout (0.01), epochs (5), rank (5),\n"
	    "             series_batch (8), context_length (30), sample_paths (100),\n"
	    "             learning_rate (0.001)\n"
	    "  forecast:  origin (day after the panel ends)\n"
	    "See docs/default_config.json for the full default file.");

	CommonFlags flags;

	std::string log_csv, panel_csv = "panel.csv", out_panel = "panel.csv";
	std::string forecasts_dir, records_csv;
	std::string origin_flag;

	auto* ingest = app.add_subcommand(
	    "ingest", "aggregate a usage-log CSV (user_id,timestamp,module,profession,region; .gz ok) "
	              "into a daily panel CSV of distinct-user counts");
	add_common(ingest, flags);
	bool trim_leading_zeros = false;
	ingest->add_option("log", log_csv, "input log CSV (.csv or .csv.gz)")->required();
	ingest->add_option("--out-panel", out_panel, "output panel CSV path");
	ingest->add_flag("--trim-leading-zeros", trim_leading_zeros,
	                 "drop the all-zero prefix before the first recorded access "
	                 "(default keeps it: a day with no events is a true zero)");

	auto* synth = app.add_subcommand(
	    "synth", "generate the synthetic default panel (5 professions x 10 modules x 625 days, "
	             "weekly seasonality, trend, one level shock); deterministic per seed");
	add_common(synth, flags);
	synth->add_option("--out-panel", out_panel, "output panel CSV path");

	auto* backtest = app.add_subcommand(
	    "backtest", "rolling-origin evaluation (default origins 2020-06-01..2020-12-01, horizon "
	                "30, season 7); writes report.json, report.csv and per-forecast CSVs");
	add_common(backtest, flags);
	backtest->add_option("panel", panel_csv, "panel CSV")->required();

	auto* forecast = app.add_subcommand(
	    "forecast", "fit every model once at --origin and write the 30-day forecasts");
	add_common(forecast, flags);
	forecast->add_option("panel", panel_csv, "panel CSV")->required();
	forecast->add_option("--origin", origin_flag,
	                     "forecast origin (default: day after the panel ends)");

	auto* plot = app.add_subcommand(
	    "plot", "render one SVG per (origin, key) from forecast CSVs: actual line, per-model "
	            "point lines, shaded 50% bands");
	add_common(plot, flags);
	plot->add_option("forecasts", forecasts_dir, "forecasts directory (out/forecasts)")->required();

	auto* report = app.add_subcommand(
	    "report", "recompute the per-model summary table from a report.csv");
	add_common(report, flags);
	report->add_option("records", records_csv, "records CSV (report.csv)")->required();

	CLI11_PARSE(app, argc, argv);

	try {
		RunConfig cfg = resolve_config(flags);
		if (ingest->parsed()) {
			if (trim_leading_zeros) {
				cfg.ingest.trim_leading_zeros = true;
			}
			return demandcast::cli::cmd_ingest(cfg, log_csv, out_panel);
		}
		if (synth->parsed()) {
			return demandcast::cli::cmd_synth(cfg, out_panel);
		}
		if (backtest->parsed()) {
			return demandcast::cli::cmd_backtest(cfg, panel_csv);
		}
		if (forecast->parsed()) {
			if (!origin_flag.empty()) {
				cfg.forecast.origin = demandcast::Date::parse(origin_flag);
			}
			return demandcast::cli::cmd_forecast(cfg, panel_csv);
		}
		if (plot->parsed()) {
			return demandcast::cli::cmd_plot(cfg, forecasts_dir);
		}
		if (report->parsed()) {
			return demandcast::cli::cmd_report(cfg, records_csv);
		}
	} catch (const std::exception& e) {
		std::cerr << "error: " << e.what() << "\n";
		return 1;
	}
	return 0;
}
