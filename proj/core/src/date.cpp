#include "demandcast/date.hpp"

#include "demandcast/errors.hpp"

#include <cstdio>

namespace demandcast {

namespace {

std::chrono::year_month_day ymd_from_days(std::int64_t days) {
	const std::chrono::sys_days sd{std::chrono::days{days}};
	return std::chrono::year_month_day{sd};
}

} // namespace

Date::Date(int year, unsigned month, unsigned day) {
	const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
	                                      std::chrono::day{day}};
	if (!ymd.ok()) {
		throw FormatError("invalid calendar date: " + std::to_string(year) + "-" +
		                  std::to_string(month) + "-" + std::to_string(day));
	}
	days_ = std::chrono::sys_days{ymd}.time_since_epoch().count();
}

Date Date::from_day_number(std::int64_t days_since_epoch) {
	Date d;
	d.days_ = days_since_epoch;
	return d;
}

Date Date::parse(const std::string& iso) {
	int y = 0;
	unsigned m = 0, d = 0;
	char tail = '\0';
	if (std::sscanf(iso.c_str(), "%d-%2u-%2u%c", &y, &m, &d, &tail) != 3 || iso.size() != 10 ||
	    iso[4] != '-' || iso[7] != '-') {
		throw FormatError("expected ISO date YYYY-MM-DD, got '" + iso + "'");
	}
	return Date(y, m, d);
}

std::chrono::year_month_day Date::ymd() const {
	return ymd_from_days(days_);
}

int Date::year() const {
	return static_cast<int>(ymd().year());
}

unsigned Date::month() const {
	return static_cast<unsigned>(ymd().month());
}

unsigned Date::day_of_month() const {
	return static_cast<unsigned>(ymd().day());
}

unsigned Date::day_of_week() const {
	const std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{days_}}};
	return wd.iso_encoding() - 1; // ISO: Monday=1..Sunday=7
}

std::string Date::to_iso() const {
	char buf[16];
	const auto v = ymd();
	std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(v.year()),
	              static_cast<unsigned>(v.month()), static_cast<unsigned>(v.day()));
	return buf;
}

} // namespace demandcast
