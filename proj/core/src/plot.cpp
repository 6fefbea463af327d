#include "demandcast/plot.hpp"

#include "demandcast/csv.hpp"
#include "demandcast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace demandcast {

std::string forecast_series_to_csv(const ForecastSeries& fs) {
	std::ostringstream out;
	out << "date,actual,point,q25,q75\n";
	for (std::size_t i = 0; i < fs.dates.size(); ++i) {
		out << fs.dates[i].to_iso() << ',';
		if (fs.actual[i]) {
			out << *fs.actual[i];
		}
		out << ',' << fs.point[i] << ',' << fs.q25[i] << ',' << fs.q75[i] << '\n';
	}
	return out.str();
}

ForecastSeries forecast_series_from_csv(const std::string& text) {
	std::istringstream in(text);
	std::string line;
	if (!std::getline(in, line)) {
		throw FormatError("forecast CSV is empty");
	}
	const auto header = split_csv_line(line);
	if (header != std::vector<std::string>{"date", "actual", "point", "q25", "q75"}) {
		throw FormatError("forecast CSV header must be 'date,actual,point,q25,q75'");
	}
	ForecastSeries fs;
	std::size_t line_no = 1;
	while (std::getline(in, line)) {
		++line_no;
		if (line.empty() || line == "\r") continue;
		const auto f = split_csv_line(line);
		if (f.size() != 5) {
			throw FormatError("forecast CSV line " + std::to_string(line_no) + ": expected 5 fields");
		}
		fs.dates.push_back(Date::parse(f[0]));
		fs.actual.push_back(f[1].empty() ? std::optional<double>{} : std::stod(f[1]));
		fs.point.push_back(std::stod(f[2]));
		fs.q25.push_back(std::stod(f[3]));
		fs.q75.push_back(std::stod(f[4]));
		if (fs.q25.back() > fs.q75.back()) {
			throw FormatError("forecast CSV line " + std::to_string(line_no) + ": q25 > q75");
		}
	}
	if (fs.dates.empty()) {
		throw FormatError("forecast CSV has no rows");
	}
	return fs;
}

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 64.0, kRight = 180.0, kTop = 40.0, kBottom = 48.0;

const char* model_color(std::size_t i) {
	static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
	                                "#ff7f0e", "#8c564b", "#17becf"};
	return palette[i % 7];
}

std::string fmt(double v) {
	char buf[32];
	std::snprintf(buf, sizeof(buf), "%.2f", v);
	return buf;
}

} // namespace

std::string render_forecast_svg(const std::string& title,
                                const std::map<std::string, ForecastSeries>& by_model) {
	if (by_model.empty()) {
		throw FormatError("nothing to plot");
	}
	const ForecastSeries& first = by_model.begin()->second;
	const std::size_t n = first.dates.size();
	for (const auto& [model, fs] : by_model) {
		if (fs.dates.size() != n || fs.point.size() != n || fs.q25.size() != n ||
		    fs.q75.size() != n || fs.actual.size() != n) {
			throw FormatError("model '" + model + "' rows differ from the rest");
		}
	}

	double lo = 0.0, hi = 1.0;
	bool any = false;
	auto grow = [&](double v) {
		if (!any) {
			lo = hi = v;
			any = true;
		} else {
			lo = std::min(lo, v);
			hi = std::max(hi, v);
		}
	};
	for (const auto& [model, fs] : by_model) {
		for (std::size_t i = 0; i < n; ++i) {
			grow(fs.point[i]);
			grow(fs.q25[i]);
			grow(fs.q75[i]);
			if (fs.actual[i]) grow(*fs.actual[i]);
		}
	}
	if (hi == lo) {
		hi = lo + 1.0;
	}
	const double pad = 0.05 * (hi - lo);
	lo -= pad;
	hi += pad;

	const double plot_w = kWidth - kLeft - kRight;
	const double plot_h = kHeight - kTop - kBottom;
	auto sx = [&](std::size_t i) {
		return kLeft + (n == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n - 1)) * plot_w;
	};
	auto sy = [&](double v) { return kTop + (1.0 - (v - lo) / (hi - lo)) * plot_h; };

	std::ostringstream svg;
	svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
	    << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
	svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
	svg << "<text x=\"" << kLeft << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
	    << title << "</text>\n";

	// axes
	svg << "<line class=\"axis\" x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\""
	    << kLeft + plot_w << "\" y2=\"" << kTop + plot_h << "\" stroke=\"#333\"/>\n";
	svg << "<line class=\"axis\" x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
	    << "\" y2=\"" << kTop + plot_h << "\" stroke=\"#333\"/>\n";
	const std::size_t xticks = std::min<std::size_t>(6, n);
	for (std::size_t k = 0; k < xticks; ++k) {
		const std::size_t i = k * (n - 1) / std::max<std::size_t>(1, xticks - 1);
		svg << "<text class=\"xtick\" x=\"" << sx(i) << "\" y=\"" << kTop + plot_h + 18
		    << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
		    << first.dates[i].to_iso() << "</text>\n";
	}
	for (int k = 0; k <= 4; ++k) {
		const double v = lo + (hi - lo) * k / 4.0;
		svg << "<text class=\"ytick\" x=\"" << kLeft - 6 << "\" y=\"" << sy(v) + 3
		    << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << fmt(v)
		    << "</text>\n";
	}

	// shaded 50% bands first so lines draw on top
	std::size_t color_idx = 0;
	for (const auto& [model, fs] : by_model) {
		std::ostringstream pts;
		for (std::size_t i = 0; i < n; ++i) {
			pts << fmt(sx(i)) << "," << fmt(sy(fs.q75[i])) << " ";
		}
		for (std::size_t i = n; i-- > 0;) {
			pts << fmt(sx(i)) << "," << fmt(sy(fs.q25[i])) << " ";
		}
		svg << "<polygon class=\"band band-" << model << "\" points=\"" << pts.str()
		    << "\" fill=\"" << model_color(color_idx) << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
		++color_idx;
	}

	color_idx = 0;
	for (const auto& [model, fs] : by_model) {
		std::ostringstream pts;
		for (std::size_t i = 0; i < n; ++i) {
			pts << fmt(sx(i)) << "," << fmt(sy(fs.point[i])) << " ";
		}
		svg << "<polyline class=\"forecast forecast-" << model << "\" points=\"" << pts.str()
		    << "\" fill=\"none\" stroke=\"" << model_color(color_idx) << "\" stroke-width=\"1.5\"/>\n";
		++color_idx;
	}

	// actual series, when present
	{
		std::ostringstream pts;
		bool have_any = false;
		for (std::size_t i = 0; i < n; ++i) {
			if (first.actual[i]) {
				pts << fmt(sx(i)) << "," << fmt(sy(*first.actual[i])) << " ";
				have_any = true;
			}
		}
		if (have_any) {
			svg << "<polyline class=\"actual\" points=\"" << pts.str()
			    << "\" fill=\"none\" stroke=\"#000\" stroke-width=\"1.8\" stroke-dasharray=\"4 2\"/>\n";
		}
	}

	// legend
	double ly = kTop + 6;
	const double lx = kLeft + plot_w + 14;
	svg << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 22 << "\" y2=\"" << ly
	    << "\" stroke=\"#000\" stroke-width=\"1.8\" stroke-dasharray=\"4 2\"/>\n";
	svg << "<text class=\"legend\" x=\"" << lx + 28 << "\" y=\"" << ly + 4
	    << "\" font-family=\"sans-serif\" font-size=\"11\">actual</text>\n";
	color_idx = 0;
	for (const auto& [model, fs] : by_model) {
		ly += 18;
		svg << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 22 << "\" y2=\"" << ly
		    << "\" stroke=\"" << model_color(color_idx) << "\" stroke-width=\"1.5\"/>\n";
		svg << "<text class=\"legend\" x=\"" << lx + 28 << "\" y=\"" << ly + 4
		    << "\" font-family=\"sans-serif\" font-size=\"11\">" << model << "</text>\n";
		++color_idx;
	}

	svg << "</svg>\n";
	return svg.str();
}

} // namespace demandcast
