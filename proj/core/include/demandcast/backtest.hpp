#pragma once

#include "demandcast/deepar.hpp"
#include "demandcast/embed_nn.hpp"
#include "demandcast/forecast.hpp"
#include "demandcast/gp_copula.hpp"
#include "demandcast/metrics.hpp"
#include "demandcast/panel.hpp"

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace demandcast {

inline constexpr const char* kModelSeasonalNaive = "seasonal_naive";
inline constexpr const char* kModelSarima = "sarima";
inline constexpr const char* kModelEmbedNN = "embed_nn";
inline constexpr const char* kModelDeepAR = "deepar";
inline constexpr const char* kModelGPCopula = "gp_copula";

std::vector<std::string> all_model_names();

// Rolling-origin evaluation plan. Default origins: the first of each month,
// June through December 2020; horizon 30 days; weekly season.
struct BacktestPlan {
	std::vector<Date> origins = default_origins();
	std::int64_t horizon = 30;
	std::vector<std::string> models = all_model_names();
	std::int64_t season = 7;
	std::int64_t validation_tail = 30;
	bool exhaustive_arima = false;

	static std::vector<Date> default_origins();
};

struct ModelConfigs {
	EmbedNNConfig embed_nn;
	DeepARConfig deepar;
	GPCopulaConfig gp_copula;
};

struct FailureRecord {
	SeriesKey key;
	Date origin;
	std::string model;
	std::string reason;
};

struct BacktestReport {
	std::vector<MetricRecord> records;
	std::vector<FailureRecord> failures;
	std::vector<std::string> aborted_models; // crossed the 50% failure rate
	AggregateReport aggregates;
	// selected auto-SARIMA fit per (origin ISO, key slug), serialized JSON
	std::map<std::pair<std::string, std::string>, std::string> sarima_fits;
	std::uint64_t seed = 0;
	std::uint64_t panel_hash = 0;
	std::uint64_t config_hash = 0;
};

// Receives every (origin, model, key) forecast as it is scored; the CLI
// writes these as CSV files, tests capture them in memory.
using ForecastSink = std::function<void(const Date& origin, const std::string& model,
                                        const SeriesKey& key, const std::vector<Date>& dates,
                                        const std::vector<double>& actual,
                                        const ForecastDistribution& forecast)>;

// Runs the full rolling-origin comparison. Per origin: split the panel, fit
// each global model once, fit classical models per series (in parallel),
// forecast the horizon and score every metric. Deterministic given
// (panel, plan, configs, seed). Classical per-series failures fall back to
// seasonal naive and are flagged; a model failing on more than half of its
// records is aborted and reported.
BacktestReport run_backtest(const Panel& panel, const BacktestPlan& plan,
                            const ModelConfigs& configs, std::uint64_t seed,
                            std::size_t jobs = 1, const ForecastSink& sink = {});

// Table-1-shaped text summary of the per-model aggregates.
std::string format_summary(const AggregateReport& aggregates);

// Round-trippable serializations; aggregates in the JSON equal an
// independent recomputation from the CSV records.
std::string report_to_json(const BacktestReport& report);
std::string records_to_csv(const std::vector<MetricRecord>& records);
std::vector<MetricRecord> records_from_csv(const std::string& csv_text);

} // namespace demandcast
