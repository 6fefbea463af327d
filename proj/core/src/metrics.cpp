#include "demandcast/metrics.hpp"

#include "demandcast/errors.hpp"

#include <algorithm>
#include <cmath>

namespace demandcast {

namespace {

void require_equal_lengths(std::span<const double> a, std::span<const double> f) {
	if (a.size() != f.size()) {
		throw ContractError("metric inputs differ in length: " + std::to_string(a.size()) + " vs " +
		                    std::to_string(f.size()));
	}
	if (a.empty()) {
		throw ContractError("metric inputs are empty");
	}
}

} // namespace

std::optional<double> mase(std::span<const double> actual, std::span<const double> forecast,
                           std::span<const double> train_history, std::int64_t season) {
	require_equal_lengths(actual, forecast);
	if (season < 1 || static_cast<std::int64_t>(train_history.size()) <= season) {
		throw ContractError("mase needs train history longer than the season");
	}
	double naive_mae = 0.0;
	const std::size_t s = static_cast<std::size_t>(season);
	for (std::size_t t = s; t < train_history.size(); ++t) {
		naive_mae += std::fabs(train_history[t] - train_history[t - s]);
	}
	naive_mae /= static_cast<double>(train_history.size() - s);
	if (naive_mae == 0.0) {
		return std::nullopt; // constant seasonal history
	}
	double mae = 0.0;
	for (std::size_t i = 0; i < actual.size(); ++i) {
		mae += std::fabs(actual[i] - forecast[i]);
	}
	mae /= static_cast<double>(actual.size());
	return mae / naive_mae;
}

std::optional<double> mape(std::span<const double> actual, std::span<const double> forecast) {
	require_equal_lengths(actual, forecast);
	double sum = 0.0;
	std::size_t n = 0;
	for (std::size_t i = 0; i < actual.size(); ++i) {
		if (actual[i] == 0.0) {
			continue;
		}
		sum += std::fabs(actual[i] - forecast[i]) / std::fabs(actual[i]);
		++n;
	}
	if (n == 0) {
		return std::nullopt;
	}
	return sum / static_cast<double>(n);
}

double smape(std::span<const double> actual, std::span<const double> forecast) {
	require_equal_lengths(actual, forecast);
	double sum = 0.0;
	for (std::size_t i = 0; i < actual.size(); ++i) {
		const double denom = std::fabs(actual[i]) + std::fabs(forecast[i]);
		if (denom > 0.0) {
			sum += 2.0 * std::fabs(actual[i] - forecast[i]) / denom;
		}
	}
	return sum / static_cast<double>(actual.size());
}

RmseMse rmse_mse(std::span<const double> actual, std::span<const double> forecast) {
	require_equal_lengths(actual, forecast);
	double sq = 0.0;
	for (std::size_t i = 0; i < actual.size(); ++i) {
		const double e = actual[i] - forecast[i];
		sq += e * e;
	}
	const double mse = sq / static_cast<double>(actual.size());
	return RmseMse{std::sqrt(mse), mse};
}

double coverage(std::span<const double> actual, std::span<const double> lower,
                std::span<const double> upper) {
	require_equal_lengths(actual, lower);
	require_equal_lengths(actual, upper);
	std::size_t inside = 0;
	for (std::size_t i = 0; i < actual.size(); ++i) {
		if (lower[i] > upper[i]) {
			throw QuantileOrderError("crossing interval at step " + std::to_string(i));
		}
		if (actual[i] >= lower[i] && actual[i] <= upper[i]) {
			++inside;
		}
	}
	return static_cast<double>(inside) / static_cast<double>(actual.size());
}

double empirical_quantile(std::vector<double> values, double q) {
	if (values.empty()) {
		throw ContractError("empirical quantile of an empty sample");
	}
	q = std::clamp(q, 0.0, 1.0);
	std::sort(values.begin(), values.end());
	const double pos = q * static_cast<double>(values.size() - 1);
	const std::size_t lo = static_cast<std::size_t>(pos);
	const std::size_t hi = std::min(lo + 1, values.size() - 1);
	const double frac = pos - static_cast<double>(lo);
	return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

BoxStats box_stats(std::vector<double> values) {
	BoxStats b;
	b.count = values.size();
	if (values.empty()) {
		return b;
	}
	std::sort(values.begin(), values.end());
	b.min = values.front();
	b.max = values.back();
	auto at = [&](double q) {
		const double pos = q * static_cast<double>(values.size() - 1);
		const std::size_t lo = static_cast<std::size_t>(pos);
		const std::size_t hi = std::min(lo + 1, values.size() - 1);
		return values[lo] + (pos - lo) * (values[hi] - values[lo]);
	};
	b.q25 = at(0.25);
	b.median = at(0.5);
	b.q75 = at(0.75);
	return b;
}

} // namespace

AggregateReport aggregate(const std::vector<MetricRecord>& records) {
	if (records.empty()) {
		throw ContractError("cannot aggregate an empty record set");
	}
	struct Acc {
		double mase = 0, mape = 0, smape = 0, rmse = 0, mse = 0, cov = 0;
		std::size_t n = 0, n_mase = 0, n_mape = 0;
	};
	std::map<std::string, Acc> by_model;
	std::map<std::pair<std::string, std::string>, std::vector<double>> monthly;

	for (const auto& r : records) {
		Acc& acc = by_model[r.model];
		++acc.n;
		if (r.mase) {
			acc.mase += *r.mase;
			++acc.n_mase;
			char month[8];
			std::snprintf(month, sizeof(month), "%04d-%02u", r.origin.year(), r.origin.month());
			monthly[{r.model, month}].push_back(*r.mase);
		}
		if (r.mape) {
			acc.mape += *r.mape;
			++acc.n_mape;
		}
		acc.smape += r.smape;
		acc.rmse += r.rmse;
		acc.mse += r.mse;
		acc.cov += r.coverage_50;
	}

	AggregateReport out;
	for (const auto& [model, acc] : by_model) {
		MetricSummary s;
		s.model = model;
		s.count = acc.n;
		if (acc.n_mase > 0) s.mase = acc.mase / static_cast<double>(acc.n_mase);
		if (acc.n_mape > 0) s.mape = acc.mape / static_cast<double>(acc.n_mape);
		s.smape = acc.smape / static_cast<double>(acc.n);
		s.rmse = acc.rmse / static_cast<double>(acc.n);
		s.mse = acc.mse / static_cast<double>(acc.n);
		s.coverage_50 = acc.cov / static_cast<double>(acc.n);
		out.per_model.push_back(std::move(s));
	}
	for (auto& [slot, values] : monthly) {
		out.monthly_mase.emplace(slot, box_stats(std::move(values)));
	}
	return out;
}

} // namespace demandcast
