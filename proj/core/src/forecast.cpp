#include "demandcast/forecast.hpp"

#include "demandcast/distributions.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace demandcast {

ForecastDistribution ForecastDistribution::from_samples(std::vector<std::vector<double>> paths,
                                                        bool clamp_non_negative) {
	if (paths.empty() || paths.front().empty()) {
		throw ContractError("forecast needs at least one sample path of positive length");
	}
	const std::size_t h = paths.front().size();
	for (auto& p : paths) {
		if (p.size() != h) {
			throw ContractError("sample paths differ in length");
		}
		if (clamp_non_negative) {
			for (double& v : p) {
				v = std::max(0.0, v);
			}
		}
	}
	ForecastDistribution out;
	out.kind_ = Kind::Samples;
	out.clamp_ = clamp_non_negative;
	out.samples_ = std::move(paths);
	out.point_.resize(h);
	for (std::size_t step = 0; step < h; ++step) {
		std::vector<double> col(out.samples_.size());
		for (std::size_t s = 0; s < out.samples_.size(); ++s) {
			col[s] = out.samples_[s][step];
		}
		out.point_[step] = empirical_quantile(std::move(col), 0.5);
	}
	return out;
}

ForecastDistribution ForecastDistribution::gaussian(std::vector<double> point,
                                                    std::vector<double> sigma) {
	if (point.empty() || point.size() != sigma.size()) {
		throw ContractError("gaussian forecast needs matching point/sigma lengths");
	}
	for (const double s : sigma) {
		if (s < 0.0 || !std::isfinite(s)) {
			throw NumericsError("gaussian forecast sigma must be finite and non-negative");
		}
	}
	ForecastDistribution out;
	out.kind_ = Kind::Gaussian;
	out.point_ = std::move(point);
	out.sigma_ = std::move(sigma);
	return out;
}

ForecastDistribution ForecastDistribution::residual_offsets(std::vector<double> point,
                                                            std::vector<double> residuals,
                                                            bool clamp_non_negative) {
	if (point.empty()) {
		throw ContractError("forecast horizon must be >= 1");
	}
	ForecastDistribution out;
	out.kind_ = Kind::Offsets;
	out.clamp_ = clamp_non_negative;
	if (clamp_non_negative) {
		for (double& v : point) {
			v = std::max(0.0, v);
		}
	}
	out.point_ = std::move(point);
	if (residuals.empty()) {
		residuals.push_back(0.0); // degenerate: zero-width band
	}
	std::sort(residuals.begin(), residuals.end());
	out.residuals_ = std::move(residuals);
	return out;
}

std::vector<double> ForecastDistribution::quantile(double q) const {
	std::vector<double> out(point_.size());
	switch (kind_) {
	case Kind::Samples: {
		for (std::size_t step = 0; step < point_.size(); ++step) {
			std::vector<double> col(samples_.size());
			for (std::size_t s = 0; s < samples_.size(); ++s) {
				col[s] = samples_[s][step];
			}
			out[step] = empirical_quantile(std::move(col), q);
		}
		break;
	}
	case Kind::Gaussian: {
		const double zq = normal_quantile(std::clamp(q, 1e-9, 1.0 - 1e-9));
		for (std::size_t step = 0; step < point_.size(); ++step) {
			out[step] = point_[step] + zq * sigma_[step];
		}
		break;
	}
	case Kind::Offsets: {
		const double off = empirical_quantile(residuals_, q);
		for (std::size_t step = 0; step < point_.size(); ++step) {
			out[step] = point_[step] + off;
			if (clamp_) {
				out[step] = std::max(0.0, out[step]);
			}
		}
		break;
	}
	}
	return out;
}

} // namespace demandcast
