#pragma once

#include "demandcast/date.hpp"
#include "demandcast/panel.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace demandcast {

// Scores for one (series, origin, model) evaluation. mase/mape can be
// undefined (constant seasonal history, all-zero actuals) and are then
// skipped by aggregation.
struct MetricRecord {
	SeriesKey key;
	Date origin;
	std::string model;
	std::optional<double> mase;
	std::optional<double> mape;
	double smape = 0.0;
	double rmse = 0.0;
	double mse = 0.0;
	double coverage_50 = 0.0;
	bool fallback = false; // model substituted by the seasonal-naive fallback
};

// mean|a - f| scaled by the in-sample one-step seasonal-naive MAE of the
// training history at lag `season`. nullopt when that denominator is zero.
std::optional<double> mase(std::span<const double> actual, std::span<const double> forecast,
                           std::span<const double> train_history, std::int64_t season);

// mean over points with actual != 0 of |a-f|/|a|; nullopt when every actual
// is zero. True zeros are excluded rather than epsilon-padded.
std::optional<double> mape(std::span<const double> actual, std::span<const double> forecast);

// mean of 2|a-f|/(|a|+|f|), in [0, 2]; terms with |a|+|f| = 0 contribute 0.
double smape(std::span<const double> actual, std::span<const double> forecast);

struct RmseMse {
	double rmse;
	double mse;
};
RmseMse rmse_mse(std::span<const double> actual, std::span<const double> forecast);

// Fraction of actuals inside [lower, upper]. Throws QuantileOrderError on
// crossing bounds.
double coverage(std::span<const double> actual, std::span<const double> lower,
                std::span<const double> upper);

// Unweighted means per model over all records, skipping undefined entries.
struct MetricSummary {
	std::string model;
	std::optional<double> mase;
	std::optional<double> mape;
	double smape = 0.0;
	double rmse = 0.0;
	double mse = 0.0;
	double coverage_50 = 0.0;
	std::size_t count = 0;
};

// Five-number summary for the per-month boxplot view.
struct BoxStats {
	double min = 0.0;
	double q25 = 0.0;
	double median = 0.0;
	double q75 = 0.0;
	double max = 0.0;
	std::size_t count = 0;
};

struct AggregateReport {
	std::vector<MetricSummary> per_model;
	// (model, origin month "YYYY-MM") -> distribution of per-record MASE
	std::map<std::pair<std::string, std::string>, BoxStats> monthly_mase;
};

AggregateReport aggregate(const std::vector<MetricRecord>& records);

// Linear-interpolation empirical quantile of an unsorted sample.
double empirical_quantile(std::vector<double> values, double q);

} // namespace demandcast
