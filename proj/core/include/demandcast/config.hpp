#pragma once

#include "demandcast/backtest.hpp"
#include "demandcast/synth.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace demandcast {

// One configuration file drives every subcommand. Defaults equal the
// reference hyperparameters; unknown keys are rejected.
struct IngestConfig {
	int utc_offset_minutes = 0;
	std::optional<Date> calendar_start; // inferred from the log when absent
	std::optional<Date> calendar_end;
	bool trim_leading_zeros = false;
};

struct ForecastCommandConfig {
	std::optional<Date> origin; // defaults to the day after the panel end
};

struct RunConfig {
	std::uint64_t seed = 42;
	std::string out_dir = "out";
	std::size_t jobs = 0; // 0 = available parallelism
	SynthSpec synth;
	IngestConfig ingest;
	BacktestPlan plan;
	ModelConfigs models;
	ForecastCommandConfig forecast;

	static RunConfig from_json_text(const std::string& text);
	static RunConfig from_json_file(const std::string& path);
	std::string to_json_text() const;
};

} // namespace demandcast
