#include "demandcast/lstm.hpp"

#include "demandcast/errors.hpp"

#include <cmath>

namespace demandcast::ad {

LstmParams LstmParams::init(std::size_t input_size, std::size_t hidden_size,
                            std::size_t num_layers, std::mt19937_64& rng,
                            const std::string& name_prefix) {
	if (input_size == 0 || hidden_size == 0 || num_layers == 0) {
		throw ConfigError("lstm needs positive input size, hidden size and layer count");
	}
	LstmParams p;
	p.input_size = input_size;
	p.hidden_size = hidden_size;
	const std::size_t h4 = 4 * hidden_size;
	for (std::size_t l = 0; l < num_layers; ++l) {
		const std::size_t in = l == 0 ? input_size : hidden_size;
		LstmLayerParams layer;
		const std::string tag = name_prefix + ".l" + std::to_string(l);
		layer.w_ih = make_tensor({in, h4}, true, tag + ".w_ih");
		layer.w_hh = make_tensor({hidden_size, h4}, true, tag + ".w_hh");
		layer.bias = make_tensor({h4}, true, tag + ".bias");
		fill_uniform(*layer.w_ih, std::sqrt(6.0 / static_cast<double>(in + h4)), rng);
		fill_uniform(*layer.w_hh, std::sqrt(3.0 / static_cast<double>(hidden_size)), rng);
		for (std::size_t j = hidden_size; j < 2 * hidden_size; ++j) {
			layer.bias->value[j] = 1.0; // forget gate
		}
		p.layers.push_back(std::move(layer));
	}
	return p;
}

std::vector<Tensor> LstmParams::parameters() const {
	std::vector<Tensor> out;
	for (const auto& l : layers) {
		out.push_back(l.w_ih);
		out.push_back(l.w_hh);
		out.push_back(l.bias);
	}
	return out;
}

LstmState lstm_zero_state(const LstmParams& params, std::size_t batch) {
	LstmState s;
	for (std::size_t l = 0; l < params.layers.size(); ++l) {
		s.layers.emplace_back(make_tensor({batch, params.hidden_size}),
		                      make_tensor({batch, params.hidden_size}));
	}
	return s;
}

Tensor lstm_step(Graph& g, const LstmParams& params, const Tensor& x, LstmState& state,
                 bool training, double dropout_p, std::mt19937_64* rng) {
	if (state.layers.size() != params.layers.size()) {
		throw ShapeError("lstm_step: state has " + std::to_string(state.layers.size()) +
		                 " layers, params " + std::to_string(params.layers.size()));
	}
	const std::size_t H = params.hidden_size;
	Tensor input = x;
	for (std::size_t l = 0; l < params.layers.size(); ++l) {
		auto& [h, c] = state.layers[l];
		const auto& lp = params.layers[l];
		Tensor z = add(g, add(g, matmul(g, input, lp.w_ih), matmul(g, h, lp.w_hh)), lp.bias);
		Tensor i_gate = sigmoid(g, slice_cols(g, z, 0, H));
		Tensor f_gate = sigmoid(g, slice_cols(g, z, H, 2 * H));
		Tensor g_cell = tanh_op(g, slice_cols(g, z, 2 * H, 3 * H));
		Tensor o_gate = sigmoid(g, slice_cols(g, z, 3 * H, 4 * H));
		c = add(g, mul(g, f_gate, c), mul(g, i_gate, g_cell));
		h = mul(g, o_gate, tanh_op(g, c));
		input = h;
		if (training && dropout_p > 0.0 && l + 1 < params.layers.size()) {
			if (rng == nullptr) {
				throw ContractError("lstm_step: dropout in training mode needs an rng");
			}
			input = dropout(g, input, dropout_p, true, *rng);
		}
	}
	return input;
}

LstmPlainState lstm_plain_zero_state(const LstmParams& params) {
	LstmPlainState s;
	s.h.assign(params.layers.size(), std::vector<double>(params.hidden_size, 0.0));
	s.c.assign(params.layers.size(), std::vector<double>(params.hidden_size, 0.0));
	return s;
}

std::vector<double> lstm_step_plain(const LstmParams& params, std::span<const double> x,
                                    LstmPlainState& state) {
	const std::size_t H = params.hidden_size;
	const std::size_t h4 = 4 * H;
	std::vector<double> input(x.begin(), x.end());
	std::vector<double> z(h4);
	auto sigm = [](double v) {
		return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
	};
	for (std::size_t l = 0; l < params.layers.size(); ++l) {
		const auto& lp = params.layers[l];
		if (input.size() != lp.w_ih->shape[0]) {
			throw ShapeError("lstm_step_plain: input width " + std::to_string(input.size()) +
			                 " does not match layer " + std::to_string(l));
		}
		std::copy(lp.bias->value.begin(), lp.bias->value.end(), z.begin());
		for (std::size_t k = 0; k < input.size(); ++k) {
			const double xv = input[k];
			if (xv == 0.0) continue;
			const double* wrow = &lp.w_ih->value[k * h4];
			for (std::size_t j = 0; j < h4; ++j) {
				z[j] += xv * wrow[j];
			}
		}
		for (std::size_t k = 0; k < H; ++k) {
			const double hv = state.h[l][k];
			if (hv == 0.0) continue;
			const double* wrow = &lp.w_hh->value[k * h4];
			for (std::size_t j = 0; j < h4; ++j) {
				z[j] += hv * wrow[j];
			}
		}
		for (std::size_t j = 0; j < H; ++j) {
			const double ig = sigm(z[j]);
			const double fg = sigm(z[H + j]);
			const double gc = std::tanh(z[2 * H + j]);
			const double og = sigm(z[3 * H + j]);
			state.c[l][j] = fg * state.c[l][j] + ig * gc;
			state.h[l][j] = og * std::tanh(state.c[l][j]);
		}
		input = state.h[l];
	}
	return input;
}

} // namespace demandcast::ad
