#pragma once

#include "demandcast/panel.hpp"

#include <cstdint>

namespace demandcast {

// Leakage-safe three-way slicing around a forecast origin:
//   train      = [start, origin - validation_tail)
//   validation = [origin - validation_tail, origin)
//   test       = [origin, origin + horizon)
struct SplitSpec {
	Date origin;
	std::int64_t horizon = 30;
	std::int64_t validation_tail = 30;
};

struct PanelSplit {
	Panel train;
	Panel validation; // empty() when validation_tail == 0
	Panel test;

	bool has_validation = false;
};

PanelSplit split(const Panel& panel, const SplitSpec& spec);

// All history strictly before the origin (train + validation); what classical
// models fit on and what the MASE denominator is computed from.
Panel history_before(const Panel& panel, const Date& origin);

} // namespace demandcast
