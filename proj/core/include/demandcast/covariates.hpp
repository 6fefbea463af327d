#pragma once

#include "demandcast/calendar.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace demandcast {

// Calendar covariates, one row per day: raw integer fields for embedding-style
// lookup plus min-max normalized real copies for dense network input.
struct CovariateMatrix {
	static constexpr std::size_t kWidth = 4;
	// column order: day_of_month, day_of_week, month, year
	std::vector<std::array<std::int64_t, kWidth>> raw;
	std::vector<std::array<double, kWidth>> normalized;
	std::array<double, kWidth> col_min{};
	std::array<double, kWidth> col_max{};

	std::size_t rows() const { return raw.size(); }

	double normalize(std::size_t col, double raw_value) const;
	double denormalize(std::size_t col, double normalized_value) const;
};

// Covariate rows for calendar days [from, to). `to` may exceed the calendar
// length: dates extrapolate onto the same daily grid, so future forecast
// windows are always covered. Deterministic and total for from <= to, from >= 0.
// Day-of-month/day-of-week/month normalize over their full civil ranges;
// year normalizes over the span of the calendar itself.
CovariateMatrix covariates_for(const Calendar& calendar, std::int64_t from, std::int64_t to);

} // namespace demandcast
