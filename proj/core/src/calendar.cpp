#include "demandcast/calendar.hpp"

#include "demandcast/errors.hpp"

namespace demandcast {

Calendar build_calendar(const Date& start, const Date& end) {
	if (end < start) {
		throw RangeError("calendar range reversed: " + start.to_iso() + " > " + end.to_iso());
	}
	return Calendar{start, (end - start) + 1};
}

Calendar build_calendar(const std::string& start_iso, const std::string& end_iso) {
	return build_calendar(Date::parse(start_iso), Date::parse(end_iso));
}

} // namespace demandcast
