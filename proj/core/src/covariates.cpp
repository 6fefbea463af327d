#include "demandcast/covariates.hpp"

#include "demandcast/errors.hpp"

namespace demandcast {

double CovariateMatrix::normalize(std::size_t col, double raw_value) const {
	const double span = col_max[col] - col_min[col];
	if (span == 0.0) {
		return 0.0;
	}
	return (raw_value - col_min[col]) / span;
}

double CovariateMatrix::denormalize(std::size_t col, double normalized_value) const {
	return col_min[col] + normalized_value * (col_max[col] - col_min[col]);
}

CovariateMatrix covariates_for(const Calendar& calendar, std::int64_t from, std::int64_t to) {
	if (from < 0 || to < from) {
		throw RangeError("covariate window [" + std::to_string(from) + ", " + std::to_string(to) +
		                 ") is invalid");
	}
	CovariateMatrix m;
	m.col_min = {1.0, 0.0, 1.0, static_cast<double>(calendar.start.year())};
	m.col_max = {31.0, 6.0, 12.0, static_cast<double>(calendar.end().year())};
	m.raw.reserve(to - from);
	m.normalized.reserve(to - from);
	for (std::int64_t i = from; i < to; ++i) {
		const Date d = calendar.date_at(i);
		const std::array<std::int64_t, CovariateMatrix::kWidth> row{
		    static_cast<std::int64_t>(d.day_of_month()), static_cast<std::int64_t>(d.day_of_week()),
		    static_cast<std::int64_t>(d.month()), static_cast<std::int64_t>(d.year())};
		m.raw.push_back(row);
		std::array<double, CovariateMatrix::kWidth> norm{};
		for (std::size_t c = 0; c < CovariateMatrix::kWidth; ++c) {
			norm[c] = m.normalize(c, static_cast<double>(row[c]));
		}
		m.normalized.push_back(norm);
	}
	return m;
}

} // namespace demandcast
