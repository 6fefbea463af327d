#pragma once

#include "demandcast/calendar.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace demandcast {

// Categorical identity of one series. Unique within a Panel.
struct SeriesKey {
	std::string profession;
	std::string module;
	std::string region = "all";

	auto operator<=>(const SeriesKey&) const = default;

	std::string to_string() const { return profession + "/" + module + "/" + region; }
	// Filesystem-safe form, used for forecast CSV and plot file names.
	std::string slug() const;
};

// Aligned daily count series for many keys over one shared calendar.
// Immutable by convention after construction; safe to share across workers.
class Panel {
public:
	Panel() = default;
	Panel(Calendar calendar, std::map<SeriesKey, std::vector<std::int64_t>> series);

	const Calendar& calendar() const { return calendar_; }
	const std::map<SeriesKey, std::vector<std::int64_t>>& series() const { return series_; }
	const std::vector<std::int64_t>& counts(const SeriesKey& key) const;
	std::size_t num_series() const { return series_.size(); }
	std::vector<SeriesKey> keys() const;

	// Copy of one series as doubles (model input form).
	std::vector<double> values(const SeriesKey& key) const;

	// Sub-panel covering day indices [from, to) of the calendar.
	Panel slice_days(std::int64_t from, std::int64_t to) const;

	// Drops the common all-zero prefix across every series (see
	// `--trim-leading-zeros`); keeps at least one day.
	Panel trim_leading_zeros() const;

	bool operator==(const Panel&) const = default;

private:
	Calendar calendar_;
	std::map<SeriesKey, std::vector<std::int64_t>> series_;
};

// Panel CSV: header `date,profession,module,region,count`, one row per
// (day, key). Input may have gaps (missing days are zero); output is gap-free.
Panel read_panel_csv(std::istream& in);
Panel read_panel_csv_file(const std::string& path);
void write_panel_csv(const Panel& panel, std::ostream& out);
void write_panel_csv_file(const Panel& panel, const std::string& path);

// FNV-1a over the canonical CSV serialization; report provenance field.
std::uint64_t panel_hash(const Panel& panel);

} // namespace demandcast
