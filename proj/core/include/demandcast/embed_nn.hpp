#pragma once

#include "demandcast/categorical.hpp"
#include "demandcast/covariates.hpp"
#include "demandcast/forecast.hpp"
#include "demandcast/panel.hpp"
#include "demandcast/tensor.hpp"

#include <map>
#include <optional>

namespace demandcast {

// Feedforward regressor with entity embeddings for the categorical fields.
// Dense stack 1000 -> 500 -> 1 with ReLU, sigmoid, identity activations and
// mean absolute error loss; one forward pass per future day (no
// autoregression). Targets are scaled per series to [0,1] by the training
// maximum.
struct EmbedNNConfig {
	std::vector<std::size_t> hidden = {1000, 500};
	std::size_t epochs = 30;
	std::size_t batch_size = 256;
	double learning_rate = 1e-3;
	std::uint64_t seed = 1;
};

class EmbedNNModel {
public:
	// Trains on `train`; `validation` (when present) provides the per-key
	// residual quartiles behind the 50% interval.
	static EmbedNNModel fit(const Panel& train, const Panel* validation, const EmbedNNConfig& cfg);

	// Forecast for `horizon` days starting the day after the stored history
	// end (`start_day_index` days after the training calendar start).
	ForecastDistribution predict(const SeriesKey& key, std::int64_t start_day_index,
	                             std::int64_t horizon) const;

	double scale_for(const SeriesKey& key) const;
	const CategoryVocab& vocab() const { return vocab_; }
	const std::vector<double>& epoch_loss() const { return epoch_loss_; }
	std::vector<ad::Tensor> parameters() const;

	void save(const std::string& path_prefix) const;
	static EmbedNNModel load(const std::string& path_prefix);

private:
	EmbedNNModel() = default;

	ad::Tensor forward(ad::Graph& g, const std::vector<std::size_t>& prof_ids,
	                   const std::vector<std::size_t>& module_ids,
	                   const std::vector<std::array<double, 4>>& covs) const;

	EmbedNNConfig cfg_;
	CategoryVocab vocab_;
	Calendar train_calendar_;
	ad::Tensor prof_table_, module_table_;
	ad::Tensor w1_, b1_, w2_, b2_, w3_, b3_;
	std::map<SeriesKey, double> scales_;
	std::map<SeriesKey, std::vector<double>> val_residuals_;
	std::vector<double> epoch_loss_;
};

} // namespace demandcast
