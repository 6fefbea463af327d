#include "demandcast/panel.hpp"

#include "demandcast/csv.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/rng.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace demandcast {

std::string SeriesKey::slug() const {
	auto sanitize = [](std::string s) {
		for (char& c : s) {
			const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
			if (!ok) c = '_';
		}
		return s;
	};
	return sanitize(profession) + "__" + sanitize(module) + "__" + sanitize(region);
}

Panel::Panel(Calendar calendar, std::map<SeriesKey, std::vector<std::int64_t>> series)
    : calendar_(calendar), series_(std::move(series)) {
	if (calendar_.length < 1) {
		throw ContractError("panel calendar must span at least one day");
	}
	if (series_.empty()) {
		throw ContractError("panel must contain at least one series");
	}
	for (const auto& [key, counts] : series_) {
		if (key.profession.empty() || key.module.empty() || key.region.empty()) {
			throw ContractError("series key labels must be non-empty");
		}
		if (static_cast<std::int64_t>(counts.size()) != calendar_.length) {
			throw ContractError("series " + key.to_string() + " has length " +
			                    std::to_string(counts.size()) + ", calendar expects " +
			                    std::to_string(calendar_.length));
		}
		for (const auto v : counts) {
			if (v < 0) {
				throw ContractError("negative count in series " + key.to_string());
			}
		}
	}
}

const std::vector<std::int64_t>& Panel::counts(const SeriesKey& key) const {
	const auto it = series_.find(key);
	if (it == series_.end()) {
		throw CategoryError("unknown series key: " + key.to_string());
	}
	return it->second;
}

std::vector<SeriesKey> Panel::keys() const {
	std::vector<SeriesKey> out;
	out.reserve(series_.size());
	for (const auto& [key, _] : series_) {
		out.push_back(key);
	}
	return out;
}

std::vector<double> Panel::values(const SeriesKey& key) const {
	const auto& c = counts(key);
	return std::vector<double>(c.begin(), c.end());
}

Panel Panel::slice_days(std::int64_t from, std::int64_t to) const {
	if (from < 0 || to > calendar_.length || from >= to) {
		throw RangeError("invalid panel slice [" + std::to_string(from) + ", " + std::to_string(to) +
		                 ") for calendar length " + std::to_string(calendar_.length));
	}
	std::map<SeriesKey, std::vector<std::int64_t>> sliced;
	for (const auto& [key, counts] : series_) {
		sliced.emplace(key, std::vector<std::int64_t>(counts.begin() + from, counts.begin() + to));
	}
	return Panel(Calendar{calendar_.date_at(from), to - from}, std::move(sliced));
}

Panel Panel::trim_leading_zeros() const {
	std::int64_t first = calendar_.length - 1;
	for (const auto& [key, counts] : series_) {
		const auto it = std::find_if(counts.begin(), counts.end(), [](std::int64_t v) { return v > 0; });
		const auto idx = static_cast<std::int64_t>(it - counts.begin());
		first = std::min(first, idx);
		if (first == 0) break;
	}
	if (first <= 0) {
		return *this;
	}
	return slice_days(first, calendar_.length);
}

Panel read_panel_csv(std::istream& in) {
	std::string line;
	if (!std::getline(in, line)) {
		throw FormatError("panel CSV is empty");
	}
	if (split_csv_line(line) != std::vector<std::string>{"date", "profession", "module", "region", "count"}) {
		throw FormatError("panel CSV header must be 'date,profession,module,region,count'");
	}

	struct Row {
		Date date;
		SeriesKey key;
		std::int64_t count;
	};
	std::vector<Row> rows;
	std::size_t line_no = 1;
	while (std::getline(in, line)) {
		++line_no;
		if (line.empty() || line == "\r") continue;
		const auto f = split_csv_line(line);
		if (f.size() != 5) {
			throw FormatError("panel CSV line " + std::to_string(line_no) + ": expected 5 fields");
		}
		std::int64_t count = 0;
		try {
			count = std::stoll(f[4]);
		} catch (const std::exception&) {
			throw FormatError("panel CSV line " + std::to_string(line_no) + ": bad count '" + f[4] + "'");
		}
		if (count < 0) {
			throw FormatError("panel CSV line " + std::to_string(line_no) + ": negative count");
		}
		rows.push_back(Row{Date::parse(f[0]), SeriesKey{f[1], f[2], f[3].empty() ? "all" : f[3]}, count});
	}
	if (rows.empty()) {
		throw FormatError("panel CSV has no data rows");
	}

	Date lo = rows.front().date, hi = rows.front().date;
	for (const auto& r : rows) {
		lo = std::min(lo, r.date);
		hi = std::max(hi, r.date);
	}
	const Calendar cal = build_calendar(lo, hi);

	std::map<SeriesKey, std::vector<std::int64_t>> series;
	for (const auto& r : rows) {
		auto [it, _] = series.try_emplace(r.key, std::vector<std::int64_t>(cal.length, 0));
		it->second[cal.index_of(r.date)] = r.count; // gaps stay zero-filled
	}
	return Panel(cal, std::move(series));
}

Panel read_panel_csv_file(const std::string& path) {
	std::ifstream in(path);
	if (!in) {
		throw FormatError("cannot open panel CSV: " + path);
	}
	return read_panel_csv(in);
}

void write_panel_csv(const Panel& panel, std::ostream& out) {
	out << "date,profession,module,region,count\n";
	for (const auto& [key, counts] : panel.series()) {
		for (std::int64_t i = 0; i < panel.calendar().length; ++i) {
			out << panel.calendar().date_at(i).to_iso() << ',' << key.profession << ',' << key.module
			    << ',' << key.region << ',' << counts[i] << '\n';
		}
	}
}

void write_panel_csv_file(const Panel& panel, const std::string& path) {
	std::ofstream out(path);
	if (!out) {
		throw FormatError("cannot write panel CSV: " + path);
	}
	write_panel_csv(panel, out);
}

std::uint64_t panel_hash(const Panel& panel) {
	std::ostringstream ss;
	write_panel_csv(panel, ss);
	return fnv1a(ss.str());
}

} // namespace demandcast
