#include "demandcast/synth.hpp"

#include "demandcast/distributions.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/rng.hpp"

#include <cmath>

namespace demandcast {

double weekly_shape(unsigned day_of_week) {
	// Monday=0 .. Sunday=6; mean-zero so weekly_amplitude scales cleanly
	static constexpr double shape[7] = {0.25, 0.35, 0.30, 0.20, 0.05, -0.60, -0.55};
	return shape[day_of_week % 7];
}

double synth_mean(const SynthSpec& spec, std::int64_t t, unsigned day_of_week) {
	double log_mult = spec.trend_per_day * static_cast<double>(t) +
	                  spec.weekly_amplitude * weekly_shape(day_of_week);
	if (spec.shock_day && t >= *spec.shock_day) {
		log_mult += std::log(spec.shock_multiplier);
	}
	return spec.base_level * std::exp(log_mult);
}

Panel synth_panel(const SynthSpec& spec) {
	if (spec.n_professions < 1 || spec.n_modules < 1 || spec.days < 1) {
		throw ConfigError("synth spec needs n_professions, n_modules and days >= 1");
	}
	if (!(spec.base_level > 0.0) || !(spec.dispersion > 0.0) || !(spec.shock_multiplier > 0.0) ||
	    !std::isfinite(spec.trend_per_day) || !(spec.weekly_amplitude >= 0.0)) {
		throw ConfigError("synth spec has out-of-range numeric fields");
	}

	const Calendar cal{spec.start, spec.days};
	std::map<SeriesKey, std::vector<std::int64_t>> series;
	for (std::int64_t p = 0; p < spec.n_professions; ++p) {
		for (std::int64_t m = 0; m < spec.n_modules; ++m) {
			const SeriesKey key{"profession_" + std::to_string(p + 1),
			                    "module_" + std::to_string(m + 1), "all"};
			// per-series stream keyed by the label so key order never matters
			auto rng = make_engine(derive_seed(spec.seed, key.to_string()));
			std::vector<std::int64_t> counts(spec.days);
			for (std::int64_t t = 0; t < spec.days; ++t) {
				const double lambda = synth_mean(spec, t, cal.date_at(t).day_of_week());
				counts[t] = neg_binomial_sample(rng, lambda, spec.dispersion);
			}
			series.emplace(key, std::move(counts));
		}
	}
	return Panel(cal, std::move(series));
}

} // namespace demandcast
