#include "demandcast/split.hpp"

#include "demandcast/errors.hpp"

namespace demandcast {

PanelSplit split(const Panel& panel, const SplitSpec& spec) {
	const Calendar& cal = panel.calendar();
	const std::int64_t origin_idx = cal.index_of(spec.origin);
	if (spec.horizon < 1) {
		throw RangeError("split horizon must be >= 1");
	}
	if (spec.validation_tail < 0) {
		throw RangeError("validation tail must be >= 0");
	}
	if (origin_idx <= 0 || origin_idx >= cal.length) {
		throw HistoryError("origin " + spec.origin.to_iso() + " must lie strictly inside the calendar " +
		                   cal.start.to_iso() + ".." + cal.end().to_iso());
	}
	const std::int64_t train_end = origin_idx - spec.validation_tail;
	if (train_end <= 0) {
		throw HistoryError("origin " + spec.origin.to_iso() + " leaves no training data before the " +
		                   std::to_string(spec.validation_tail) + "-day validation tail");
	}
	if (origin_idx + spec.horizon > cal.length) {
		throw HistoryError("test window " + spec.origin.to_iso() + " +" + std::to_string(spec.horizon) +
		                   "d runs past the panel end " + cal.end().to_iso());
	}

	PanelSplit out{
	    panel.slice_days(0, train_end),
	    spec.validation_tail > 0 ? panel.slice_days(train_end, origin_idx) : Panel{},
	    panel.slice_days(origin_idx, origin_idx + spec.horizon),
	    spec.validation_tail > 0,
	};
	return out;
}

Panel history_before(const Panel& panel, const Date& origin) {
	const std::int64_t origin_idx = panel.calendar().index_of(origin);
	if (origin_idx <= 0) {
		throw HistoryError("no history before origin " + origin.to_iso());
	}
	return panel.slice_days(0, std::min(origin_idx, panel.calendar().length));
}

} // namespace demandcast
