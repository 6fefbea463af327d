#include "demandcast/ingest.hpp"

#include "demandcast/csv.hpp"
#include "demandcast/errors.hpp"

#include <cstdio>
#include <map>
#include <set>

namespace demandcast {

std::optional<Date> event_day(const std::string& timestamp, int utc_offset_minutes) {
	int y = 0;
	unsigned mo = 0, da = 0, hh = 0, mi = 0, ss = 0;
	const int n = std::sscanf(timestamp.c_str(), "%d-%2u-%2uT%2u:%2u:%2u", &y, &mo, &da, &hh, &mi, &ss);
	if (n < 3) {
		return std::nullopt;
	}
	if (n >= 5 && (hh > 23 || mi > 59 || ss > 60)) {
		return std::nullopt;
	}
	try {
		Date d(y, mo, da);
		if (n >= 5) {
			const std::int64_t minute_of_day = static_cast<std::int64_t>(hh) * 60 + mi;
			const std::int64_t shifted = minute_of_day + utc_offset_minutes;
			if (shifted < 0) {
				d = d.plus_days(-1 + shifted / (24 * 60)); // shifted > -24h for sane offsets
			} else if (shifted >= 24 * 60) {
				d = d.plus_days(shifted / (24 * 60));
			}
		}
		return d;
	} catch (const FormatError&) {
		return std::nullopt;
	}
}

namespace {

struct Accumulator {
	const Calendar& calendar;
	IngestStats& stats;
	int utc_offset_minutes;
	// profession pinned to first observation per user
	std::map<std::string, std::string> user_profession;
	// distinct users per (day, key)
	std::map<std::pair<std::int64_t, SeriesKey>, std::set<std::string>> users;
	std::set<SeriesKey> keys_seen;

	void add(const LogEvent& ev, std::size_t line_no) {
		++stats.rows_read;
		const auto day = event_day(ev.timestamp, utc_offset_minutes);
		if (!day || ev.user_id.empty() || ev.module.empty() || ev.profession.empty()) {
			++stats.rows_skipped;
			if (stats.skip_messages.size() < 50) {
				stats.skip_messages.push_back("line " + std::to_string(line_no) + ": unparseable event");
			}
			return;
		}
		const auto [it, _] = user_profession.try_emplace(ev.user_id, ev.profession);
		const std::string& profession = it->second;
		const SeriesKey key{profession, ev.module, ev.region.empty() ? "all" : ev.region};
		keys_seen.insert(key);
		const std::int64_t idx = calendar.index_of(*day);
		if (idx < 0 || idx >= calendar.length) {
			++stats.events_outside;
			return;
		}
		users[{idx, key}].insert(ev.user_id);
	}

	Panel finish() {
		if (stats.rows_read > 0 &&
		    stats.rows_skipped * 10 > stats.rows_read) { // strict 10% threshold
			throw IngestError("ingest aborted: " + std::to_string(stats.rows_skipped) + " of " +
			                  std::to_string(stats.rows_read) + " rows unparseable (>10%)");
		}
		std::map<SeriesKey, std::vector<std::int64_t>> series;
		for (const auto& key : keys_seen) {
			series.emplace(key, std::vector<std::int64_t>(calendar.length, 0));
		}
		if (series.empty()) {
			// an empty log still yields a defined panel over the calendar
			series.emplace(SeriesKey{"unknown", "unknown", "all"},
			               std::vector<std::int64_t>(calendar.length, 0));
		}
		for (const auto& [slot, ids] : users) {
			series[slot.second][slot.first] = static_cast<std::int64_t>(ids.size());
		}
		return Panel(calendar, std::move(series));
	}
};

} // namespace

Panel aggregate_logs(const std::vector<LogEvent>& events, const Calendar& calendar,
                     IngestStats* stats, int utc_offset_minutes) {
	IngestStats local;
	Accumulator acc{calendar, stats ? *stats : local, utc_offset_minutes};
	std::size_t line_no = 0;
	for (const auto& ev : events) {
		acc.add(ev, ++line_no);
	}
	return acc.finish();
}

Panel aggregate_log_csv(const std::string& path, const Calendar& calendar, IngestStats* stats,
                        int utc_offset_minutes) {
	IngestStats local;
	Accumulator acc{calendar, stats ? *stats : local, utc_offset_minutes};
	bool header_checked = false;
	for_each_line(path, [&](std::size_t line_no, const std::string& line) {
		if (!header_checked) {
			header_checked = true;
			if (split_csv_line(line) !=
			    std::vector<std::string>{"user_id", "timestamp", "module", "profession", "region"}) {
				throw IngestError("log CSV header must be 'user_id,timestamp,module,profession,region'");
			}
			return;
		}
		if (line.empty() || line == "\r") {
			return;
		}
		const auto f = split_csv_line(line);
		if (f.size() != 5) {
			++acc.stats.rows_read;
			++acc.stats.rows_skipped;
			if (acc.stats.skip_messages.size() < 50) {
				acc.stats.skip_messages.push_back("line " + std::to_string(line_no) +
				                                  ": expected 5 fields, got " + std::to_string(f.size()));
			}
			return;
		}
		acc.add(LogEvent{f[0], f[1], f[2], f[3], f[4]}, line_no);
	});
	return acc.finish();
}

} // namespace demandcast
