#pragma once

#include "demandcast/panel.hpp"

#include <cstdint>
#include <optional>

namespace demandcast {

// Synthetic stand-in for the app-usage dataset shape: daily negative binomial
// counts with weekly seasonality, mild exponential trend and an optional
// mid-series level shock. Seed fully determines the output.
struct SynthSpec {
	std::int64_t n_professions = 5;
	std::int64_t n_modules = 10;
	std::int64_t days = 625;
	Date start = Date(2019, 5, 1);
	double base_level = 6.0;
	double trend_per_day = 0.0015;
	double weekly_amplitude = 0.35;
	std::optional<std::int64_t> shock_day = 330;
	double shock_multiplier = 1.6;
	double dispersion = 0.25;
	std::uint64_t seed = 42;
};

// Mean for day t:
//   lambda_t = base_level * exp(trend_per_day * t
//                               + weekly_amplitude * weekly_shape(dow_t)
//                               + log(shock_multiplier) * [t >= shock_day])
double synth_mean(const SynthSpec& spec, std::int64_t t, unsigned day_of_week);

// Fixed zero-mean weekly profile (weekday plateau, weekend dip).
double weekly_shape(unsigned day_of_week);

Panel synth_panel(const SynthSpec& spec);

} // namespace demandcast
