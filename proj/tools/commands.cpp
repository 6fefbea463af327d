#include "commands.hpp"

#include "demandcast/backtest.hpp"
#include "demandcast/csv.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/ingest.hpp"
#include "demandcast/plot.hpp"
#include "demandcast/split.hpp"
#include "demandcast/synth.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace demandcast::cli {

namespace fs = std::filesystem;

namespace {

int log_level() {
	const char* env = std::getenv("DEMANDCAST_LOG");
	if (env == nullptr) return 1;
	const std::string v = env;
	if (v == "quiet" || v == "0") return 0;
	if (v == "debug" || v == "2") return 2;
	return 1;
}

void info(const std::string& msg) {
	if (log_level() >= 1) {
		std::cerr << "[demandcast] " << msg << "\n";
	}
}

void ensure_dir(const fs::path& p) {
	std::error_code ec;
	fs::create_directories(p, ec);
	if (ec) {
		throw FormatError("cannot create directory " + p.string() + ": " + ec.message());
	}
}

ForecastSeries to_forecast_series(const std::vector<Date>& dates,
                                  const std::vector<double>& actual,
                                  const ForecastDistribution& fc) {
	ForecastSeries fs;
	fs.dates = dates;
	fs.actual.assign(actual.begin(), actual.end());
	fs.point = fc.point();
	fs.q25 = fc.quantile(0.25);
	fs.q75 = fc.quantile(0.75);
	return fs;
}

} // namespace

int cmd_ingest(const RunConfig& cfg, const std::string& log_csv_path,
               const std::string& out_panel_csv) {
	Calendar calendar;
	if (cfg.ingest.calendar_start && cfg.ingest.calendar_end) {
		calendar = build_calendar(*cfg.ingest.calendar_start, *cfg.ingest.calendar_end);
	} else {
		// infer the span from the events themselves
		std::optional<Date> lo, hi;
		bool header = true;
		for_each_line(log_csv_path, [&](std::size_t, const std::string& line) {
			if (header) {
				header = false;
				return;
			}
			const auto f = split_csv_line(line);
			if (f.size() != 5) return;
			const auto day = event_day(f[1], cfg.ingest.utc_offset_minutes);
			if (!day) return;
			lo = lo ? std::min(*lo, *day) : *day;
			hi = hi ? std::max(*hi, *day) : *day;
		});
		if (!lo) {
			// an empty log still produces a defined (single-day, all-zero) panel
			lo = hi = Date(2020, 1, 1);
		}
		calendar = build_calendar(*lo, *hi);
	}

	IngestStats stats;
	Panel panel = aggregate_log_csv(log_csv_path, calendar, &stats, cfg.ingest.utc_offset_minutes);
	if (cfg.ingest.trim_leading_zeros) {
		panel = panel.trim_leading_zeros();
	}
	write_panel_csv_file(panel, out_panel_csv);
	std::cout << "rows_read=" << stats.rows_read << " rows_skipped=" << stats.rows_skipped
	          << " events_outside_calendar=" << stats.events_outside
	          << " series=" << panel.num_series() << " days=" << panel.calendar().length << "\n";
	for (const auto& msg : stats.skip_messages) {
		std::cerr << "skip: " << msg << "\n";
	}
	return 0;
}

int cmd_synth(const RunConfig& cfg, const std::string& out_panel_csv) {
	SynthSpec spec = cfg.synth;
	const Panel panel = synth_panel(spec);
	ensure_dir(fs::path(out_panel_csv).parent_path().empty()
	               ? fs::path(".")
	               : fs::path(out_panel_csv).parent_path());
	write_panel_csv_file(panel, out_panel_csv);
	std::cout << "panel: " << panel.num_series() << " series x " << panel.calendar().length
	          << " days (" << panel.calendar().start.to_iso() << ".."
	          << panel.calendar().end().to_iso() << ") -> " << out_panel_csv << "\n";
	return 0;
}

int cmd_backtest(const RunConfig& cfg, const std::string& panel_csv_path) {
	const Panel panel = read_panel_csv_file(panel_csv_path);
	const fs::path out_dir(cfg.out_dir);
	ensure_dir(out_dir);
	const fs::path forecasts_dir = out_dir / "forecasts";

	ForecastSink sink = [&](const Date& origin, const std::string& model, const SeriesKey& key,
	                        const std::vector<Date>& dates, const std::vector<double>& actual,
	                        const ForecastDistribution& fc) {
		const fs::path dir = forecasts_dir / origin.to_iso() / model;
		ensure_dir(dir);
		write_text_file((dir / (key.slug() + ".csv")).string(),
		                forecast_series_to_csv(to_forecast_series(dates, actual, fc)));
	};

	info("running backtest: " + std::to_string(cfg.plan.origins.size()) + " origins, " +
	     std::to_string(panel.num_series()) + " series");
	const BacktestReport report =
	    run_backtest(panel, cfg.plan, cfg.models, cfg.seed, cfg.jobs, sink);

	write_text_file((out_dir / "report.json").string(), report_to_json(report));
	write_text_file((out_dir / "report.csv").string(), records_to_csv(report.records));
	for (const auto& [slot, json] : report.sarima_fits) {
		const fs::path dir = forecasts_dir / slot.first / "sarima";
		ensure_dir(dir);
		write_text_file((dir / (slot.second + ".fit.json")).string(), json);
	}
	std::cout << format_summary(report.aggregates);
	if (!report.failures.empty()) {
		std::cerr << report.failures.size() << " flagged failures (see report.json)\n";
	}
	if (!report.aborted_models.empty()) {
		for (const auto& m : report.aborted_models) {
			std::cerr << "model aborted (>50% failures): " << m << "\n";
		}
		return 1;
	}
	return 0;
}

int cmd_forecast(const RunConfig& cfg, const std::string& panel_csv_path) {
	const Panel panel = read_panel_csv_file(panel_csv_path);
	const Date origin =
	    cfg.forecast.origin ? *cfg.forecast.origin : panel.calendar().end().plus_days(1);

	// fit on everything before the origin; score nothing
	BacktestPlan plan = cfg.plan;
	plan.origins = {origin};

	const std::int64_t origin_idx = panel.calendar().index_of(origin);
	if (origin_idx < 60) {
		throw ConfigError("forecast origin " + origin.to_iso() + " needs 60 days of history");
	}

	// extend the panel with zeros when the origin touches the calendar end so
	// a single split covers fit + forecast bookkeeping
	Panel working = panel;
	if (origin_idx + plan.horizon > panel.calendar().length) {
		std::map<SeriesKey, std::vector<std::int64_t>> extended;
		const auto need = origin_idx + plan.horizon;
		for (const auto& [key, counts] : panel.series()) {
			std::vector<std::int64_t> c = counts;
			c.resize(need, 0);
			extended.emplace(key, std::move(c));
		}
		working = Panel(Calendar{panel.calendar().start, need}, std::move(extended));
	}

	const fs::path out_dir(cfg.out_dir);
	const fs::path forecasts_dir = out_dir / "forecasts";
	const bool have_actuals = origin_idx + plan.horizon <= panel.calendar().length;

	ForecastSink sink = [&](const Date& o, const std::string& model, const SeriesKey& key,
	                        const std::vector<Date>& dates, const std::vector<double>& actual,
	                        const ForecastDistribution& fc) {
		ForecastSeries fs_row = to_forecast_series(dates, actual, fc);
		if (!have_actuals) {
			for (auto& a : fs_row.actual) {
				a.reset();
			}
		}
		const fs::path dir = forecasts_dir / o.to_iso() / model;
		ensure_dir(dir);
		write_text_file((dir / (key.slug() + ".csv")).string(), forecast_series_to_csv(fs_row));
	};

	const BacktestReport report =
	    run_backtest(working, plan, cfg.models, cfg.seed, cfg.jobs, sink);
	std::cout << "forecasts written for origin " << origin.to_iso() << " ("
	          << report.records.size() << " series-model pairs) under "
	          << (forecasts_dir / origin.to_iso()).string() << "\n";
	return report.aborted_models.empty() ? 0 : 1;
}

int cmd_plot(const RunConfig& cfg, const std::string& forecasts_dir) {
	const fs::path root(forecasts_dir);
	if (!fs::exists(root)) {
		throw FormatError("forecast directory not found: " + forecasts_dir);
	}
	const fs::path plots_dir = fs::path(cfg.out_dir) / "plots";
	ensure_dir(plots_dir);

	std::size_t written = 0;
	for (const auto& origin_entry : fs::directory_iterator(root)) {
		if (!origin_entry.is_directory()) continue;
		const std::string origin = origin_entry.path().filename().string();
		// key slug -> model -> series
		std::map<std::string, std::map<std::string, ForecastSeries>> grouped;
		for (const auto& model_entry : fs::directory_iterator(origin_entry.path())) {
			if (!model_entry.is_directory()) continue;
			const std::string model = model_entry.path().filename().string();
			for (const auto& file : fs::directory_iterator(model_entry.path())) {
				if (file.path().extension() != ".csv") continue;
				const std::string key = file.path().stem().string();
				grouped[key][model] = forecast_series_from_csv(read_text_file(file.path().string()));
			}
		}
		for (const auto& [key, by_model] : grouped) {
			const std::string svg = render_forecast_svg(origin + "  " + key, by_model);
			write_text_file((plots_dir / (origin + "__" + key + ".svg")).string(), svg);
			++written;
		}
	}
	std::cout << "wrote " << written << " SVG file(s) under " << plots_dir.string() << "\n";
	return written > 0 ? 0 : 1;
}

int cmd_report(const RunConfig& cfg, const std::string& records_csv_path) {
	const auto records = records_from_csv(read_text_file(records_csv_path));
	if (records.empty()) {
		std::cerr << "no records in " << records_csv_path << "\n";
		return 1;
	}
	const AggregateReport agg = aggregate(records);
	std::cout << format_summary(agg);
	const fs::path out_dir(cfg.out_dir);
	ensure_dir(out_dir);
	BacktestReport shell;
	shell.records = records;
	shell.aggregates = agg;
	write_text_file((out_dir / "report_summary.json").string(), report_to_json(shell));
	return 0;
}

} // namespace demandcast::cli
