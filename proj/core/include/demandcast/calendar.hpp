#pragma once

#include "demandcast/date.hpp"

#include <cstdint>

namespace demandcast {

// Contiguous daily grid shared by every series in a Panel.
struct Calendar {
	Date start;
	std::int64_t length = 0; // days, >= 1

	Date date_at(std::int64_t day_index) const { return start.plus_days(day_index); }
	Date end() const { return start.plus_days(length - 1); }

	// Index of `d` on the grid; negative or >= length means outside.
	std::int64_t index_of(const Date& d) const { return d - start; }
	bool contains(const Date& d) const {
		const auto i = index_of(d);
		return i >= 0 && i < length;
	}

	bool operator==(const Calendar&) const = default;
};

// Inclusive [start, end] daily calendar. Throws RangeError when end < start.
Calendar build_calendar(const Date& start, const Date& end);
Calendar build_calendar(const std::string& start_iso, const std::string& end_iso);

} // namespace demandcast
