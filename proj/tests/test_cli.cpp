#include "commands.hpp"

#include "demandcast/backtest.hpp"
#include "demandcast/config.hpp"
#include "demandcast/csv.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/panel.hpp"
#include "demandcast/plot.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace demandcast;
namespace fs = std::filesystem;

namespace {

struct TempDir {
	fs::path path;
	explicit TempDir(const std::string& name) : path(fs::path("/tmp") / name) {
		fs::remove_all(path);
		fs::create_directories(path);
	}
	~TempDir() { fs::remove_all(path); }
	std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

RunConfig tiny_config(const TempDir& dir) {
	RunConfig cfg;
	cfg.out_dir = dir / "out";
	cfg.seed = 4;
	cfg.jobs = 1;
	cfg.synth.n_professions = 1;
	cfg.synth.n_modules = 2;
	cfg.synth.days = 150;
	cfg.synth.start = Date(2020, 1, 1);
	cfg.synth.shock_day.reset();
	cfg.plan.origins = {Date(2020, 4, 1)};
	cfg.plan.horizon = 10;
	cfg.plan.validation_tail = 10;
	cfg.plan.models = {kModelSeasonalNaive, kModelSarima};
	return cfg;
}

} // namespace

TEST_CASE("config file parsing: defaults, overrides, unknown keys rejected") {
	const RunConfig defaults = RunConfig::from_json_text("{}");
	CHECK(defaults.seed == 42);
	CHECK(defaults.plan.origins.size() == 7);
	CHECK(defaults.plan.horizon == 30);
	CHECK(defaults.models.deepar.hidden_size == 20);
	CHECK(defaults.models.deepar.layers == 2);
	CHECK(defaults.models.deepar.dropout == 0.01);
	CHECK(defaults.models.deepar.epochs == 300);
	CHECK(defaults.models.deepar.batch_size == 30);
	CHECK(defaults.models.gp_copula.epochs == 5);
	CHECK(defaults.models.embed_nn.hidden == std::vector<std::size_t>{1000, 500});
	CHECK(defaults.synth.n_professions == 5);
	CHECK(defaults.synth.n_modules == 10);
	CHECK(defaults.synth.days == 625);

	const RunConfig parsed = RunConfig::from_json_text(
	    R"({"seed": 7, "backtest": {"horizon": 14, "models": ["seasonal_naive"]},
	        "deepar": {"epochs": 3}})");
	CHECK(parsed.seed == 7);
	CHECK(parsed.plan.horizon == 14);
	CHECK(parsed.plan.models == std::vector<std::string>{"seasonal_naive"});
	CHECK(parsed.models.deepar.epochs == 3);

	CHECK_THROWS_AS(RunConfig::from_json_text(R"({"sed": 7})"), ConfigError);
	CHECK_THROWS_AS(RunConfig::from_json_text(R"({"deepar": {"epoch": 3}})"), ConfigError);
	CHECK_THROWS_AS(RunConfig::from_json_text("not json"), ConfigError);

	// round trip through the emitter
	const RunConfig again = RunConfig::from_json_text(parsed.to_json_text());
	CHECK(again.seed == parsed.seed);
	CHECK(again.plan.horizon == parsed.plan.horizon);
}

TEST_CASE("cmd_synth is deterministic per seed") {
	TempDir dir("demandcast_cli_synth");
	RunConfig cfg = tiny_config(dir);
	CHECK(cli::cmd_synth(cfg, dir / "a.csv") == 0);
	CHECK(cli::cmd_synth(cfg, dir / "b.csv") == 0);
	CHECK(read_text_file(dir / "a.csv") == read_text_file(dir / "b.csv"));
	cfg.synth.seed += 1;
	CHECK(cli::cmd_synth(cfg, dir / "c.csv") == 0);
	CHECK(read_text_file(dir / "a.csv") != read_text_file(dir / "c.csv"));
	// 1 profession x 2 modules
	const Panel p = read_panel_csv_file(dir / "a.csv");
	CHECK(p.num_series() == 2);
	CHECK(p.calendar().length == 150);
}

TEST_CASE("cmd_ingest handles empty logs, thresholds and writes gap-free panels") {
	TempDir dir("demandcast_cli_ingest");
	RunConfig cfg = tiny_config(dir);
	cfg.ingest.calendar_start = Date(2020, 1, 1);
	cfg.ingest.calendar_end = Date(2020, 1, 10);

	// empty log: zero panel, exit 0
	write_text_file(dir / "empty.csv", "user_id,timestamp,module,profession,region\n");
	CHECK(cli::cmd_ingest(cfg, dir / "empty.csv", dir / "empty_panel.csv") == 0);
	const Panel empty = read_panel_csv_file(dir / "empty_panel.csv");
	CHECK(empty.calendar().length == 10);

	// 5% malformed rows succeed
	std::string log = "user_id,timestamp,module,profession,region\n";
	for (int i = 0; i < 95; ++i) {
		log += "u" + std::to_string(i) + ",2020-01-0" + std::to_string(1 + i % 9) +
		       "T10:00:00,m,p,all\n";
	}
	for (int i = 0; i < 5; ++i) {
		log += "ux,borked,m,p,all\n";
	}
	write_text_file(dir / "ok.csv", log);
	CHECK(cli::cmd_ingest(cfg, dir / "ok.csv", dir / "ok_panel.csv") == 0);

	// 11% malformed rows fail with nonzero status via IngestError
	std::string bad = "user_id,timestamp,module,profession,region\n";
	for (int i = 0; i < 89; ++i) {
		bad += "u" + std::to_string(i) + ",2020-01-02T10:00:00,m,p,all\n";
	}
	for (int i = 0; i < 11; ++i) {
		bad += "ux,borked,m,p,all\n";
	}
	write_text_file(dir / "bad.csv", bad);
	CHECK_THROWS_AS(cli::cmd_ingest(cfg, dir / "bad.csv", dir / "bad_panel.csv"), IngestError);
}

TEST_CASE("cmd_backtest writes the full bundle and matches its own summary") {
	TempDir dir("demandcast_cli_backtest");
	RunConfig cfg = tiny_config(dir);
	REQUIRE(cli::cmd_synth(cfg, dir / "panel.csv") == 0);
	CHECK(cli::cmd_backtest(cfg, dir / "panel.csv") == 0);

	CHECK(fs::exists(fs::path(cfg.out_dir) / "report.json"));
	CHECK(fs::exists(fs::path(cfg.out_dir) / "report.csv"));
	// one forecast CSV per (origin, model, key), plus serialized SARIMA fits
	std::size_t csvs = 0, fit_jsons = 0;
	for (const auto& e : fs::recursive_directory_iterator(fs::path(cfg.out_dir) / "forecasts")) {
		if (e.path().extension() == ".csv") ++csvs;
		if (e.path().string().ends_with(".fit.json")) ++fit_jsons;
	}
	CHECK(csvs == 1 * 2 * 2);
	CHECK(fit_jsons == 1 * 2);

	// determinism: rerun gives an identical report.json
	const std::string first = read_text_file((fs::path(cfg.out_dir) / "report.json").string());
	CHECK(cli::cmd_backtest(cfg, dir / "panel.csv") == 0);
	CHECK(read_text_file((fs::path(cfg.out_dir) / "report.json").string()) == first);

	// the report command reproduces the same aggregate table from the CSV
	CHECK(cli::cmd_report(cfg, (fs::path(cfg.out_dir) / "report.csv").string()) == 0);
}

TEST_CASE("cmd_plot renders one SVG per (origin, key) with a band per model") {
	TempDir dir("demandcast_cli_plot");
	RunConfig cfg = tiny_config(dir);
	REQUIRE(cli::cmd_synth(cfg, dir / "panel.csv") == 0);
	REQUIRE(cli::cmd_backtest(cfg, dir / "panel.csv") == 0);
	CHECK(cli::cmd_plot(cfg, (fs::path(cfg.out_dir) / "forecasts").string()) == 0);

	std::size_t svgs = 0;
	std::string one_svg;
	for (const auto& e : fs::directory_iterator(fs::path(cfg.out_dir) / "plots")) {
		if (e.path().extension() == ".svg") {
			++svgs;
			one_svg = read_text_file(e.path().string());
		}
	}
	CHECK(svgs == 2); // one origin x two keys
	// one shaded band and one point line per model, plus the actual line
	auto count = [&](const std::string& needle) {
		std::size_t n = 0, pos = 0;
		while ((pos = one_svg.find(needle, pos)) != std::string::npos) {
			++n;
			pos += needle.size();
		}
		return n;
	};
	CHECK(count("class=\"band") == 2);
	CHECK(count("class=\"forecast") == 2);
	CHECK(count("class=\"actual\"") == 1);
	CHECK(count("class=\"legend\"") == 3); // actual + two models
}

TEST_CASE("plot rejects malformed forecast CSVs") {
	CHECK_THROWS_AS(forecast_series_from_csv("date,point\n"), FormatError);
	CHECK_THROWS_AS(
	    forecast_series_from_csv("date,actual,point,q25,q75\n2020-01-01,1,2,5,3\n"),
	    FormatError); // q25 > q75
	// zero-width band is fine
	const auto ok = forecast_series_from_csv("date,actual,point,q25,q75\n2020-01-01,1,2,3,3\n");
	CHECK(ok.q25[0] == ok.q75[0]);
	// blank actuals parse as missing
	const auto blank = forecast_series_from_csv("date,actual,point,q25,q75\n2020-01-01,,2,1,3\n");
	CHECK_FALSE(blank.actual[0].has_value());
}

TEST_CASE("cmd_forecast emits future forecasts past the panel end") {
	TempDir dir("demandcast_cli_forecast");
	RunConfig cfg = tiny_config(dir);
	cfg.plan.models = {kModelSeasonalNaive};
	REQUIRE(cli::cmd_synth(cfg, dir / "panel.csv") == 0);
	CHECK(cli::cmd_forecast(cfg, dir / "panel.csv") == 0);
	// default origin: day after panel end (2020-05-29 end -> 2020-05-30)
	const Panel p = read_panel_csv_file(dir / "panel.csv");
	const std::string origin = p.calendar().end().plus_days(1).to_iso();
	const fs::path fdir = fs::path(cfg.out_dir) / "forecasts" / origin / kModelSeasonalNaive;
	REQUIRE(fs::exists(fdir));
	std::size_t files = 0;
	for (const auto& e : fs::directory_iterator(fdir)) {
		const auto fsr = forecast_series_from_csv(read_text_file(e.path().string()));
		CHECK(fsr.dates.front().to_iso() == origin);
		for (const auto& a : fsr.actual) {
			CHECK_FALSE(a.has_value()); // pure future: no actuals
		}
		++files;
	}
	CHECK(files == 2);
}
