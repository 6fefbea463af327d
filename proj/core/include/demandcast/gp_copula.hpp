#pragma once

#include "demandcast/categorical.hpp"
#include "demandcast/forecast.hpp"
#include "demandcast/lstm.hpp"
#include "demandcast/panel.hpp"

#include <map>
#include <set>

namespace demandcast {

// Mid-rank empirical CDF of a training series; the marginal transform of the
// copula. Inverse interpolates linearly between order statistics and clamps
// extrapolation to [0, 2 * train max].
class EmpiricalCdf {
public:
	static EmpiricalCdf from_counts(std::span<const std::int64_t> counts);

	// (#{x < y} + #{x <= y}) / (2n)
	double cdf(double y) const;
	double inverse(double u) const;
	bool degenerate() const { return values_.size() < 2; } // constant series
	double train_max() const { return train_max_; }

	const std::vector<double>& knot_values() const { return values_; }
	const std::vector<double>& knot_us() const { return us_; }
	static EmpiricalCdf from_knots(std::vector<double> values, std::vector<double> us,
	                               std::size_t n);

private:
	std::vector<double> values_; // unique sorted
	std::vector<double> us_;     // mid-rank position per unique value
	std::size_t n_ = 0;
	double train_max_ = 0.0;
};

// Multivariate forecaster: per-series counts map through their empirical CDF
// and the Gaussian quantile to z-scores; a shared LSTM (same settings as the
// DeepAR model) produces per-series states whose projections parametrize a
// low-rank Gaussian N(mu, D + V V^T) across series. Five epochs by default.
struct GPCopulaConfig {
	std::size_t hidden_size = 20;
	std::size_t layers = 2;
	double dropout = 0.01;
	std::size_t epochs = 5;
	std::size_t rank = 5;
	std::size_t series_batch = 8;
	std::size_t context_length = 30;
	std::size_t horizon = 30;
	std::size_t sample_paths = 100;
	double learning_rate = 1e-3;
	std::uint64_t seed = 1;
};

class GPCopulaModel {
public:
	static GPCopulaModel init_untrained(const Panel& train, const GPCopulaConfig& cfg);
	static GPCopulaModel fit(const Panel& train, const GPCopulaConfig& cfg);

	// Deterministic teacher-forced NLL per (step, batch) over the panel.
	double evaluate_nll(const Panel& panel) const;

	// Joint ancestral sampling across every modeled series; returns one
	// distribution per key. Series dropped as degenerate forecast their
	// constant level.
	std::map<SeriesKey, ForecastDistribution> forecast_all(const Panel& history,
	                                                       std::size_t horizon, std::size_t paths,
	                                                       std::uint64_t seed) const;

	const std::set<SeriesKey>& dropped_keys() const { return dropped_; }
	const std::vector<double>& epoch_nll() const { return epoch_nll_; }
	const EmpiricalCdf& cdf_for(const SeriesKey& key) const;
	std::vector<ad::Tensor> parameters() const;

	void save(const std::string& path_prefix) const;
	static GPCopulaModel load(const std::string& path_prefix);

	const GPCopulaConfig& config() const { return cfg_; }

private:
	GPCopulaModel() = default;

	void train_epochs(const Panel& train);

	GPCopulaConfig cfg_;
	CategoryVocab vocab_;
	Calendar train_calendar_;
	ad::LstmParams lstm_;
	ad::Tensor w_mu_, b_mu_, w_d_, b_d_, w_v_;
	ad::Tensor prof_table_, module_table_;
	std::map<SeriesKey, EmpiricalCdf> cdfs_;
	std::set<SeriesKey> dropped_;
	std::map<SeriesKey, double> constant_level_; // for dropped keys
	std::vector<double> epoch_nll_;
};

} // namespace demandcast
