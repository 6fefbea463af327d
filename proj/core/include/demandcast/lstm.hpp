#pragma once

#include "demandcast/tensor.hpp"

#include <span>

namespace demandcast::ad {

// Stacked LSTM with packed gate weights (input, forget, cell, output blocks
// of width H each). Forget-gate bias starts at 1.
struct LstmLayerParams {
	Tensor w_ih; // [in x 4H]
	Tensor w_hh; // [H x 4H]
	Tensor bias; // [4H]
};

struct LstmParams {
	std::size_t input_size = 0;
	std::size_t hidden_size = 0;
	std::vector<LstmLayerParams> layers;

	static LstmParams init(std::size_t input_size, std::size_t hidden_size, std::size_t num_layers,
	                       std::mt19937_64& rng, const std::string& name_prefix = "lstm");

	std::vector<Tensor> parameters() const;
};

// Graph-recorded step over a batch. `state` holds (h, c) per layer, shape
// [batch x H] each; pass {} for the zero initial state. Dropout is applied
// between layers in training mode only.
struct LstmState {
	std::vector<std::pair<Tensor, Tensor>> layers; // (h, c)
};

LstmState lstm_zero_state(const LstmParams& params, std::size_t batch);

Tensor lstm_step(Graph& g, const LstmParams& params, const Tensor& x, LstmState& state,
                 bool training = false, double dropout_p = 0.0, std::mt19937_64* rng = nullptr);

// Tape-free forward for sampling/inference on a single sequence element.
// Reads the same weight tensors; matches lstm_step exactly in eval mode.
struct LstmPlainState {
	std::vector<std::vector<double>> h;
	std::vector<std::vector<double>> c;
};

LstmPlainState lstm_plain_zero_state(const LstmParams& params);

std::vector<double> lstm_step_plain(const LstmParams& params, std::span<const double> x,
                                    LstmPlainState& state);

} // namespace demandcast::ad
