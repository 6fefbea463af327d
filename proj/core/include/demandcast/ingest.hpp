#pragma once

#include "demandcast/panel.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace demandcast {

// One raw app-usage event. Timestamps are ISO datetimes; the calendar day is
// taken in a single configured timezone (UTC by default).
struct LogEvent {
	std::string user_id;
	std::string timestamp;
	std::string module;
	std::string profession;
	std::string region = "all";
};

struct IngestStats {
	std::size_t rows_read = 0;
	std::size_t rows_skipped = 0;   // unparseable, reported with line numbers
	std::size_t events_outside = 0; // parseable but outside the calendar
	std::vector<std::string> skip_messages;
};

// Daily distinct-user counts per (day, profession, module, region). A user
// hitting the same key many times in one day contributes one. Events outside
// the calendar are dropped and counted. Throws IngestError when more than 10%
// of rows fail to parse. A user's profession is pinned to the first value
// observed for that user (event order).
Panel aggregate_logs(const std::vector<LogEvent>& events, const Calendar& calendar,
                     IngestStats* stats = nullptr, int utc_offset_minutes = 0);

// Streaming variant over the log CSV format
// `user_id,timestamp,module,profession,region` (gzip accepted by extension).
Panel aggregate_log_csv(const std::string& path, const Calendar& calendar, IngestStats* stats,
                        int utc_offset_minutes = 0);

// Calendar day of an ISO datetime (`YYYY-MM-DD[Thh:mm[:ss[Z]]]`) under the
// configured offset; nullopt when unparseable.
std::optional<Date> event_day(const std::string& timestamp, int utc_offset_minutes = 0);

} // namespace demandcast
