#include "demandcast/backtest.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/rng.hpp"
#include "demandcast/synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace demandcast;

namespace {

Panel small_panel(std::int64_t days = 160, std::int64_t n_series = 3, std::uint64_t seed = 5) {
	SynthSpec spec;
	spec.n_professions = 1;
	spec.n_modules = n_series;
	spec.days = days;
	spec.start = Date(2020, 1, 1);
	spec.base_level = 8.0;
	spec.trend_per_day = 0.001;
	spec.weekly_amplitude = 0.4;
	spec.shock_day.reset();
	spec.dispersion = 0.2;
	spec.seed = seed;
	return synth_panel(spec);
}

BacktestPlan fast_plan() {
	BacktestPlan plan;
	plan.origins = {Date(2020, 4, 1), Date(2020, 5, 1)};
	plan.horizon = 14;
	plan.models = {kModelSeasonalNaive, kModelSarima};
	plan.season = 7;
	plan.validation_tail = 14;
	return plan;
}

ModelConfigs fast_configs() {
	ModelConfigs c;
	c.embed_nn.hidden = {16, 8};
	c.embed_nn.epochs = 5;
	c.deepar.hidden_size = 6;
	c.deepar.layers = 1;
	c.deepar.epochs = 2;
	c.deepar.context_length = 14;
	c.deepar.sample_paths = 20;
	c.gp_copula.hidden_size = 6;
	c.gp_copula.layers = 1;
	c.gp_copula.epochs = 1;
	c.gp_copula.rank = 2;
	c.gp_copula.context_length = 14;
	c.gp_copula.sample_paths = 20;
	return c;
}

} // namespace

TEST_CASE("default plan has seven month-start origins") {
	const auto origins = BacktestPlan::default_origins();
	REQUIRE(origins.size() == 7);
	CHECK(origins.front() == Date(2020, 6, 1));
	CHECK(origins.back() == Date(2020, 12, 1));
	for (const auto& o : origins) {
		CHECK(o.day_of_month() == 1);
	}
}

TEST_CASE("one series, one model, one origin yields exactly one record") {
	const Panel panel = small_panel(160, 1);
	BacktestPlan plan;
	plan.origins = {Date(2020, 4, 1)};
	plan.horizon = 14;
	plan.models = {kModelSeasonalNaive};
	const auto report = run_backtest(panel, plan, fast_configs(), 1);
	CHECK(report.records.size() == 1);
	CHECK(report.failures.empty());
	CHECK(report.records[0].model == kModelSeasonalNaive);
	CHECK(report.records[0].origin == Date(2020, 4, 1));
}

TEST_CASE("record count is origins x series x models minus flagged failures") {
	const Panel panel = small_panel();
	const auto report = run_backtest(panel, fast_plan(), fast_configs(), 1);
	CHECK(report.records.size() + report.failures.size() == 2 * 3 * 2);
	CHECK(report.aggregates.per_model.size() == 2);
}

TEST_CASE("identical seeds give byte-identical reports; jobs do not matter") {
	const Panel panel = small_panel();
	const auto r1 = run_backtest(panel, fast_plan(), fast_configs(), 42, 1);
	const auto r2 = run_backtest(panel, fast_plan(), fast_configs(), 42, 2);
	CHECK(report_to_json(r1) == report_to_json(r2));
	const auto r3 = run_backtest(panel, fast_plan(), fast_configs(), 43, 1);
	CHECK(report_to_json(r1) != report_to_json(r3));
}

TEST_CASE("data after the last test window never influences the report") {
	const Panel panel = small_panel(200);
	// same panel truncated right after the last origin's horizon
	const auto plan = fast_plan();
	const std::int64_t needed =
	    panel.calendar().index_of(plan.origins.back()) + plan.horizon;
	const Panel truncated = panel.slice_days(0, needed);
	const auto r1 = run_backtest(panel, plan, fast_configs(), 9);
	const auto r2 = run_backtest(truncated, plan, fast_configs(), 9);
	// identical records; provenance differs through the panel hash only
	CHECK(records_to_csv(r1.records) == records_to_csv(r2.records));
}

TEST_CASE("aggregates equal an independent recomputation from the records CSV") {
	const Panel panel = small_panel();
	const auto report = run_backtest(panel, fast_plan(), fast_configs(), 21);
	const auto csv = records_to_csv(report.records);
	const auto parsed = records_from_csv(csv);
	REQUIRE(parsed.size() == report.records.size());
	const auto recomputed = aggregate(parsed);
	REQUIRE(recomputed.per_model.size() == report.aggregates.per_model.size());
	for (std::size_t i = 0; i < recomputed.per_model.size(); ++i) {
		const auto& a = recomputed.per_model[i];
		const auto& b = report.aggregates.per_model[i];
		CHECK(a.model == b.model);
		CHECK(a.count == b.count);
		if (a.mase && b.mase) CHECK(*a.mase == doctest::Approx(*b.mase).epsilon(1e-12));
		CHECK(a.smape == doctest::Approx(b.smape).epsilon(1e-12));
		CHECK(a.rmse == doctest::Approx(b.rmse).epsilon(1e-12));
		CHECK(a.mse == doctest::Approx(b.mse).epsilon(1e-12));
		CHECK(a.coverage_50 == doctest::Approx(b.coverage_50).epsilon(1e-12));
	}
}

TEST_CASE("seasonal naive is present and finite on non-constant history") {
	const Panel panel = small_panel();
	const auto report = run_backtest(panel, fast_plan(), fast_configs(), 33);
	std::size_t naive_records = 0;
	for (const auto& r : report.records) {
		if (r.model == kModelSeasonalNaive) {
			++naive_records;
			REQUIRE(r.mase.has_value());
			CHECK(std::isfinite(*r.mase));
		}
	}
	CHECK(naive_records == 2 * 3);
}

TEST_CASE("constant series routes sarima into the flagged seasonal-naive fallback") {
	Calendar cal{Date(2020, 1, 1), 160};
	std::map<SeriesKey, std::vector<std::int64_t>> series{
	    {SeriesKey{"p", "const", "all"}, std::vector<std::int64_t>(160, 7)}};
	const Panel panel(cal, std::move(series));
	BacktestPlan plan;
	plan.origins = {Date(2020, 4, 1)};
	plan.horizon = 14;
	plan.models = {kModelSarima};
	const auto report = run_backtest(panel, plan, fast_configs(), 3);
	REQUIRE(report.records.size() == 1);
	CHECK(report.records[0].fallback);
	// exact-periodic (constant) history: naive fallback forecast is exact
	CHECK(report.records[0].rmse == doctest::Approx(0.0));
	// constant seasonal history makes MASE undefined, recorded as missing
	CHECK_FALSE(report.records[0].mase.has_value());
}

TEST_CASE("plan validation rejects malformed plans") {
	const Panel panel = small_panel();
	auto plan = fast_plan();
	plan.origins = {};
	CHECK_THROWS_AS(run_backtest(panel, plan, fast_configs(), 1), ConfigError);
	plan = fast_plan();
	plan.origins = {Date(2020, 5, 1), Date(2020, 4, 1)};
	CHECK_THROWS_AS(run_backtest(panel, plan, fast_configs(), 1), ConfigError);
	plan = fast_plan();
	plan.models = {"nonsense"};
	CHECK_THROWS_AS(run_backtest(panel, plan, fast_configs(), 1), ConfigError);
	plan = fast_plan();
	plan.origins = {Date(2020, 1, 15)}; // < 60 days history
	CHECK_THROWS_AS(run_backtest(panel, plan, fast_configs(), 1), ConfigError);
}

TEST_CASE("forecast sink receives every scored forecast") {
	const Panel panel = small_panel();
	std::size_t calls = 0;
	std::vector<double> last_q25, last_q75;
	ForecastSink sink = [&](const Date&, const std::string&, const SeriesKey&,
	                        const std::vector<Date>& dates, const std::vector<double>& actual,
	                        const ForecastDistribution& fc) {
		++calls;
		CHECK(dates.size() == 14);
		CHECK(actual.size() == 14);
		last_q25 = fc.quantile(0.25);
		last_q75 = fc.quantile(0.75);
	};
	const auto report = run_backtest(panel, fast_plan(), fast_configs(), 11, 1, sink);
	CHECK(calls == report.records.size());
	for (std::size_t i = 0; i < last_q25.size(); ++i) {
		CHECK(last_q25[i] <= last_q75[i]);
	}
}

TEST_CASE("a model failing everywhere is aborted and reported") {
	// history is long enough for the plan but far too short for the DeepAR
	// context + horizon window, so every fit fails
	const Panel panel = small_panel(100, 2);
	BacktestPlan plan;
	plan.origins = {Date(2020, 3, 11)};
	plan.horizon = 14;
	plan.validation_tail = 5;
	plan.models = {kModelSeasonalNaive, kModelDeepAR};
	ModelConfigs configs = fast_configs();
	configs.deepar.context_length = 60;
	const auto report = run_backtest(panel, plan, configs, 2);
	REQUIRE(report.aborted_models.size() == 1);
	CHECK(report.aborted_models[0] == kModelDeepAR);
	CHECK(report.failures.size() == 2);
	// the benchmark still produced its records
	CHECK(report.records.size() == 2);
}

TEST_CASE("deep models run within the harness end to end") {
	const Panel panel = small_panel(170, 4, 7);
	BacktestPlan plan;
	plan.origins = {Date(2020, 5, 1)};
	plan.horizon = 14;
	plan.validation_tail = 14;
	plan.models = {kModelEmbedNN, kModelDeepAR, kModelGPCopula};
	const auto report = run_backtest(panel, plan, fast_configs(), 19);
	CHECK(report.records.size() == 3 * 4);
	CHECK(report.failures.empty());
	CHECK(report.aborted_models.empty());
	for (const auto& r : report.records) {
		CHECK(std::isfinite(r.smape));
		CHECK(r.coverage_50 >= 0.0);
		CHECK(r.coverage_50 <= 1.0);
	}
}
