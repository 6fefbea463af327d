#include "demandcast/seasonal_naive.hpp"

#include "demandcast/errors.hpp"

#include <numeric>
#include <vector>

namespace demandcast {

ForecastDistribution seasonal_naive(std::span<const double> train, std::int64_t season,
                                    std::int64_t horizon) {
	if (train.empty()) {
		throw HistoryError("seasonal naive needs a non-empty history");
	}
	if (season < 1 || horizon < 1) {
		throw ContractError("seasonal naive needs season >= 1 and horizon >= 1");
	}
	const std::int64_t n = static_cast<std::int64_t>(train.size());

	std::vector<double> point(horizon);
	if (n < season) {
		const double mean = std::accumulate(train.begin(), train.end(), 0.0) / static_cast<double>(n);
		std::fill(point.begin(), point.end(), mean);
	} else {
		// last season recycled: forecast t+h = value at t+h-season
		for (std::int64_t h = 0; h < horizon; ++h) {
			point[h] = train[n - season + (h % season)];
		}
	}

	std::vector<double> residuals;
	for (std::int64_t t = season; t < n; ++t) {
		residuals.push_back(train[t] - train[t - season]);
	}
	return ForecastDistribution::residual_offsets(std::move(point), std::move(residuals));
}

} // namespace demandcast
