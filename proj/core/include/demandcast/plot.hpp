#pragma once

#include "demandcast/date.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace demandcast {

// One (origin, model, key) forecast as persisted to CSV:
// `date,actual,point,q25,q75`, actual blank for unobserved future days.
struct ForecastSeries {
	std::vector<Date> dates;
	std::vector<std::optional<double>> actual;
	std::vector<double> point;
	std::vector<double> q25;
	std::vector<double> q75;
};

std::string forecast_series_to_csv(const ForecastSeries& fs);
// Throws FormatError on a missing column, malformed row or q25 > q75.
ForecastSeries forecast_series_from_csv(const std::string& text);

// Actual line, one point line per model and a shaded 50% band per model,
// with legend and ISO date axis. Pure text SVG, deterministic; tests assert
// on element classes and coordinates rather than pixels.
std::string render_forecast_svg(const std::string& title,
                                const std::map<std::string, ForecastSeries>& by_model);

} // namespace demandcast
