#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>

namespace demandcast {

// Civil calendar date on the proleptic Gregorian calendar. Thin value type
// around a day count since 1970-01-01 so day arithmetic is trivial and exact.
class Date {
public:
	Date() = default;
	Date(int year, unsigned month, unsigned day);

	static Date from_day_number(std::int64_t days_since_epoch);
	// Parses strict ISO-8601 "YYYY-MM-DD". Throws FormatError otherwise.
	static Date parse(const std::string& iso);

	std::int64_t day_number() const { return days_; }
	int year() const;
	unsigned month() const;        // 1..12
	unsigned day_of_month() const; // 1..31
	unsigned day_of_week() const;  // Monday = 0 .. Sunday = 6

	Date plus_days(std::int64_t n) const { return from_day_number(days_ + n); }
	std::int64_t operator-(const Date& other) const { return days_ - other.days_; }

	std::string to_iso() const;

	auto operator<=>(const Date&) const = default;

private:
	std::chrono::year_month_day ymd() const;

	std::int64_t days_ = 0;
};

} // namespace demandcast
