#include "demandcast/csv.hpp"
#include "demandcast/distributions.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/ingest.hpp"
#include "demandcast/rng.hpp"
#include "demandcast/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace demandcast;

namespace {

// brute-force oracle: distinct users per (day, key) from the raw event list
std::map<std::pair<std::string, std::string>, std::int64_t>
oracle_counts(const std::vector<LogEvent>& events, const std::string& day) {
	std::map<std::pair<std::string, std::string>, std::set<std::string>> sets;
	for (const auto& ev : events) {
		if (ev.timestamp.substr(0, 10) == day) {
			sets[{ev.profession, ev.module}].insert(ev.user_id);
		}
	}
	std::map<std::pair<std::string, std::string>, std::int64_t> out;
	for (const auto& [k, s] : sets) {
		out[k] = static_cast<std::int64_t>(s.size());
	}
	return out;
}

} // namespace

TEST_CASE("same user many hits in one day counts once") {
	const Calendar cal = build_calendar("2020-01-01", "2020-01-03");
	std::vector<LogEvent> events(5, LogEvent{"u1", "2020-01-02T10:00:00", "m", "midwife", "all"});
	const Panel p = aggregate_logs(events, cal);
	CHECK(p.counts(SeriesKey{"midwife", "m", "all"}) == std::vector<std::int64_t>{0, 1, 0});
}

TEST_CASE("distinct-user counts match the set oracle") {
	const Calendar cal = build_calendar("2020-01-01", "2020-01-01");
	std::vector<LogEvent> events;
	for (const auto* user : {"u1", "u2", "u3"}) {
		for (const auto* module : {"m1", "m2"}) {
			events.push_back(LogEvent{user, "2020-01-01T08:30:00", module, "nurse", "all"});
		}
	}
	const Panel p = aggregate_logs(events, cal);
	const auto oracle = oracle_counts(events, "2020-01-01");
	CHECK(p.counts(SeriesKey{"nurse", "m1", "all"})[0] == oracle.at({"nurse", "m1"}));
	CHECK(p.counts(SeriesKey{"nurse", "m2", "all"})[0] == oracle.at({"nurse", "m2"}));
	CHECK(p.counts(SeriesKey{"nurse", "m1", "all"})[0] == 3);
}

TEST_CASE("aggregation is invariant under reordering and duplication") {
	const Calendar cal = build_calendar("2020-02-01", "2020-02-07");
	std::vector<LogEvent> events;
	std::mt19937_64 rng(11);
	std::uniform_int_distribution<int> user(1, 9), day(1, 7), mod(1, 3);
	for (int i = 0; i < 200; ++i) {
		char ts[32];
		std::snprintf(ts, sizeof(ts), "2020-02-0%dT%02d:00:00", day(rng), i % 24);
		events.push_back(LogEvent{"u" + std::to_string(user(rng)), ts,
		                          "m" + std::to_string(mod(rng)), "nurse", "all"});
	}
	const Panel base = aggregate_logs(events, cal);

	auto shuffled = events;
	std::shuffle(shuffled.begin(), shuffled.end(), rng);
	CHECK(aggregate_logs(shuffled, cal) == base);

	auto duplicated = events;
	duplicated.insert(duplicated.end(), events.begin(), events.end());
	CHECK(aggregate_logs(duplicated, cal) == base);
}

TEST_CASE("events outside the calendar are dropped with a counter") {
	const Calendar cal = build_calendar("2020-01-10", "2020-01-11");
	std::vector<LogEvent> events{
	    {"u1", "2020-01-10T01:00:00", "m", "p", "all"},
	    {"u2", "2019-12-31T01:00:00", "m", "p", "all"},
	    {"u3", "2020-02-01T01:00:00", "m", "p", "all"},
	};
	IngestStats stats;
	const Panel p = aggregate_logs(events, cal, &stats);
	CHECK(stats.events_outside == 2);
	CHECK(p.counts(SeriesKey{"p", "m", "all"})[0] == 1);
}

TEST_CASE("unparseable rows are skipped; above 10% the ingest fails") {
	const Calendar cal = build_calendar("2020-01-01", "2020-01-02");
	std::vector<LogEvent> ok(95, LogEvent{"u", "2020-01-01T00:00:00", "m", "p", "all"});
	std::vector<LogEvent> bad5(5, LogEvent{"u", "not-a-time", "m", "p", "all"});
	auto events = ok;
	events.insert(events.end(), bad5.begin(), bad5.end());
	IngestStats stats;
	CHECK_NOTHROW(aggregate_logs(events, cal, &stats));
	CHECK(stats.rows_skipped == 5);

	std::vector<LogEvent> bad11(11, LogEvent{"u", "not-a-time", "m", "p", "all"});
	events = std::vector<LogEvent>(89, LogEvent{"u", "2020-01-01T00:00:00", "m", "p", "all"});
	events.insert(events.end(), bad11.begin(), bad11.end());
	CHECK_THROWS_AS(aggregate_logs(events, cal), IngestError);
}

TEST_CASE("profession pinned to first observation per user") {
	const Calendar cal = build_calendar("2020-01-01", "2020-01-02");
	std::vector<LogEvent> events{
	    {"u1", "2020-01-01T01:00:00", "m", "nurse", "all"},
	    {"u1", "2020-01-02T01:00:00", "m", "midwife", "all"},
	};
	const Panel p = aggregate_logs(events, cal);
	CHECK(p.counts(SeriesKey{"nurse", "m", "all"}) == std::vector<std::int64_t>{1, 1});
	CHECK(p.series().find(SeriesKey{"midwife", "m", "all"}) == p.series().end());
}

TEST_CASE("gzip log ingestion by extension") {
	const std::string dir = "/tmp/demandcast_test_gz";
	std::system(("mkdir -p " + dir).c_str());
	const std::string csv = "user_id,timestamp,module,profession,region\n"
	                        "u1,2020-01-01T10:00:00,m,p,all\n"
	                        "u2,2020-01-01T11:00:00,m,p,all\n";
	write_text_file(dir + "/log.csv", csv);
	std::system(("gzip -kf " + dir + "/log.csv").c_str());
	const Calendar cal = build_calendar("2020-01-01", "2020-01-01");
	const Panel plain = aggregate_log_csv(dir + "/log.csv", cal, nullptr);
	const Panel gz = aggregate_log_csv(dir + "/log.csv.gz", cal, nullptr);
	CHECK(plain == gz);
	CHECK(plain.counts(SeriesKey{"p", "m", "all"})[0] == 2);
}

TEST_CASE("synth panel determinism and shape") {
	SynthSpec spec;
	spec.n_professions = 2;
	spec.n_modules = 3;
	spec.days = 40;
	spec.seed = 99;
	const Panel a = synth_panel(spec);
	const Panel b = synth_panel(spec);
	CHECK(a == b);
	CHECK(a.num_series() == 6);
	CHECK(a.calendar().length == 40);
	for (const auto& [key, counts] : a.series()) {
		for (const auto v : counts) {
			CHECK(v >= 0);
		}
	}
	spec.seed = 100;
	const Panel c = synth_panel(spec);
	CHECK(c.num_series() == 6);
	CHECK_FALSE(a == c);
}

TEST_CASE("shock multiplier of one is a no-op") {
	SynthSpec with;
	with.n_professions = 1;
	with.n_modules = 2;
	with.days = 60;
	with.shock_day = 30;
	with.shock_multiplier = 1.0;
	SynthSpec without = with;
	without.shock_day.reset();
	CHECK(synth_panel(with) == synth_panel(without));
}

TEST_CASE("no-signal spec stays near the base level") {
	SynthSpec spec;
	spec.n_professions = 1;
	spec.n_modules = 1;
	spec.days = 400;
	spec.base_level = 20.0;
	spec.trend_per_day = 0.0;
	spec.weekly_amplitude = 0.0;
	spec.shock_day.reset();
	spec.dispersion = 1e-9;
	const Panel p = synth_panel(spec);
	const auto& counts = p.series().begin()->second;
	double mean = 0.0;
	for (const auto v : counts) mean += static_cast<double>(v);
	mean /= static_cast<double>(counts.size());
	// Poisson limit: SE = sqrt(20/400) ~ 0.22
	CHECK(std::fabs(mean - 20.0) < 5 * 0.23);
}

TEST_CASE("negative binomial empirical mean matches the closed form") {
	auto rng = make_engine(5);
	const double mu = 5.0, alpha = 0.4;
	const int n = 10000;
	double sum = 0.0;
	for (int i = 0; i < n; ++i) {
		sum += static_cast<double>(neg_binomial_sample(rng, mu, alpha));
	}
	const double mean = sum / n;
	const double se = std::sqrt((mu + alpha * mu * mu) / n);
	CHECK(std::fabs(mean - mu) < 5 * se);
}
