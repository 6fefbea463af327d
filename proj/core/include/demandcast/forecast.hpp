#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace demandcast {

// Per-horizon forecast distribution. Three interchangeable representations:
//   - sample paths (S x H): quantiles are per-step empirical, point = median
//   - gaussian: point +- z(q) * sigma_h
//   - residual offsets: point + empirical quantile of a residual sample
// quantile(q) is monotone in q for all three.
class ForecastDistribution {
public:
	static ForecastDistribution from_samples(std::vector<std::vector<double>> paths,
	                                         bool clamp_non_negative = false);
	static ForecastDistribution gaussian(std::vector<double> point, std::vector<double> sigma);
	static ForecastDistribution residual_offsets(std::vector<double> point,
	                                             std::vector<double> residuals,
	                                             bool clamp_non_negative = false);

	std::int64_t horizon() const { return static_cast<std::int64_t>(point_.size()); }
	const std::vector<double>& point() const { return point_; }
	std::vector<double> quantile(double q) const;

	bool has_samples() const { return !samples_.empty(); }
	const std::vector<std::vector<double>>& samples() const { return samples_; }

private:
	std::vector<double> point_;
	std::vector<std::vector<double>> samples_; // S paths, each length H
	std::vector<double> sigma_;                // gaussian representation
	std::vector<double> residuals_;            // offset representation (sorted)
	bool clamp_ = false;
	enum class Kind { Samples, Gaussian, Offsets } kind_ = Kind::Gaussian;
};

} // namespace demandcast
