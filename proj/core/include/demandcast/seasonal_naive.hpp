#pragma once

#include "demandcast/forecast.hpp"

#include <cstdint>
#include <span>

namespace demandcast {

// Benchmark forecaster: repeats the values at the equivalent time points of
// the previous season, recycling whole seasons for long horizons. A series
// shorter than one season falls back to its mean. The 50% band comes from
// the quartiles of the in-sample seasonal-naive residuals.
ForecastDistribution seasonal_naive(std::span<const double> train, std::int64_t season,
                                    std::int64_t horizon);

} // namespace demandcast
