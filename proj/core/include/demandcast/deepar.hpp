#pragma once

#include "demandcast/categorical.hpp"
#include "demandcast/forecast.hpp"
#include "demandcast/lstm.hpp"
#include "demandcast/panel.hpp"

#include <map>

namespace demandcast {

// Autoregressive recurrent forecaster: one global LSTM over all series,
// inputs per step are the previous (scaled) target, calendar covariates and
// the categorical embeddings; a softplus head emits negative binomial
// (mu, alpha) per step. Defaults follow the reference configuration:
// 20 hidden units, 2 layers, dropout 0.01, 300 epochs, batch size 30.
struct DeepARConfig {
	std::size_t hidden_size = 20;
	std::size_t layers = 2;
	double dropout = 0.01;
	std::size_t epochs = 300;
	std::size_t batch_size = 30;
	std::size_t context_length = 30;
	std::size_t horizon = 30;
	std::size_t sample_paths = 100;
	double learning_rate = 1e-3;
	std::uint64_t seed = 1;
};

class DeepARModel {
public:
	// Freshly initialized weights, no training steps taken.
	static DeepARModel init_untrained(const Panel& train, const DeepARConfig& cfg);
	static DeepARModel fit(const Panel& train, const DeepARConfig& cfg);

	// Teacher-forced negative log-likelihood per step over the whole panel;
	// deterministic, evaluation mode.
	double evaluate_nll(const Panel& panel) const;

	// Ancestral sampling: unrolls the state over the last context_length
	// days of `history`, then draws `paths` sample trajectories feeding each
	// sampled count back as the next input.
	ForecastDistribution forecast(const SeriesKey& key, const Panel& history,
	                              std::size_t horizon, std::size_t paths,
	                              std::uint64_t seed) const;

	double scale_for(const SeriesKey& key) const; // nu = 1 + mean(train)
	const std::vector<double>& epoch_training_nll() const { return epoch_nll_; }
	std::vector<ad::Tensor> parameters() const;

	void save(const std::string& path_prefix) const;
	static DeepARModel load(const std::string& path_prefix);

	const DeepARConfig& config() const { return cfg_; }

private:
	DeepARModel() = default;

	void train_epochs(const Panel& train);

	struct HeadOut {
		double mu_raw;
		double alpha;
	};
	HeadOut plain_head(std::span<const double> h) const;

	DeepARConfig cfg_;
	CategoryVocab vocab_;
	Calendar train_calendar_;
	ad::LstmParams lstm_;
	ad::Tensor w_mu_, b_mu_, w_alpha_, b_alpha_;
	ad::Tensor prof_table_, module_table_;
	std::map<SeriesKey, double> scales_;
	std::vector<double> epoch_nll_;
};

} // namespace demandcast
