#include "demandcast/distributions.hpp"
#include "demandcast/lstm.hpp"
#include "demandcast/metrics.hpp"
#include "demandcast/rng.hpp"
#include "demandcast/sarima.hpp"
#include "demandcast/tensor.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace demandcast;

namespace {

std::vector<double> noisy_series(std::size_t n, std::uint64_t seed) {
	auto rng = make_engine(seed);
	std::normal_distribution<double> noise(0.0, 1.0);
	std::vector<double> x(n);
	for (std::size_t t = 0; t < n; ++t) {
		x[t] = 10.0 + 2.0 * std::sin(2.0 * M_PI * (t % 7) / 7.0) + noise(rng);
	}
	return x;
}

void bm_sarima_loglik(benchmark::State& state) {
	const auto x = noisy_series(500, 1);
	SarimaParams params;
	params.ar = {0.4, 0.1};
	params.ma = {0.2};
	params.sar = {0.3};
	params.intercept = 10.0;
	params.sigma2 = 1.2;
	const SarimaOrder order{2, 0, 1, 1, 0, 0, 7};
	for (auto _ : state) {
		benchmark::DoNotOptimize(sarima_loglik(order, params, x));
	}
}
BENCHMARK(bm_sarima_loglik);

void bm_fit_sarima_css(benchmark::State& state) {
	const auto x = noisy_series(400, 2);
	const SarimaOrder order{1, 0, 1, 1, 0, 1, 7};
	for (auto _ : state) {
		benchmark::DoNotOptimize(fit_sarima(x, order, FitMethod::CSS));
	}
}
BENCHMARK(bm_fit_sarima_css);

void bm_lstm_step_plain(benchmark::State& state) {
	auto rng = make_engine(3);
	const auto params = ad::LstmParams::init(13, 20, 2, rng);
	auto lstm_state = ad::lstm_plain_zero_state(params);
	std::vector<double> x(13, 0.3);
	for (auto _ : state) {
		benchmark::DoNotOptimize(ad::lstm_step_plain(params, x, lstm_state));
	}
}
BENCHMARK(bm_lstm_step_plain);

void bm_lstm_step_graph_batch30(benchmark::State& state) {
	auto rng = make_engine(4);
	const auto params = ad::LstmParams::init(13, 20, 2, rng);
	auto x = ad::make_tensor({30, 13});
	ad::fill_uniform(*x, 0.5, rng);
	for (auto _ : state) {
		ad::Graph g;
		auto lstm_state = ad::lstm_zero_state(params, 30);
		benchmark::DoNotOptimize(ad::lstm_step(g, params, x, lstm_state));
	}
}
BENCHMARK(bm_lstm_step_graph_batch30);

void bm_lowrank_logpdf(benchmark::State& state) {
	const std::size_t n = 50, r = 5;
	auto rng = make_engine(5);
	std::uniform_real_distribution<double> dist(-1.0, 1.0), dpos(0.3, 2.0);
	std::vector<double> z(n), mu(n), d(n), v(n * r);
	for (auto& q : z) q = dist(rng);
	for (auto& q : mu) q = dist(rng);
	for (auto& q : d) q = dpos(rng);
	for (auto& q : v) q = dist(rng);
	for (auto _ : state) {
		benchmark::DoNotOptimize(lowrank_gaussian_logpdf(z, mu, d, v, r));
	}
}
BENCHMARK(bm_lowrank_logpdf);

void bm_metrics_window(benchmark::State& state) {
	const auto hist = noisy_series(500, 6);
	const auto actual = noisy_series(30, 7);
	const auto forecast = noisy_series(30, 8);
	for (auto _ : state) {
		benchmark::DoNotOptimize(mase(actual, forecast, hist, 7));
		benchmark::DoNotOptimize(smape(actual, forecast));
		benchmark::DoNotOptimize(rmse_mse(actual, forecast));
	}
}
BENCHMARK(bm_metrics_window);

void bm_nb_sample(benchmark::State& state) {
	auto rng = make_engine(9);
	for (auto _ : state) {
		benchmark::DoNotOptimize(neg_binomial_sample(rng, 8.0, 0.3));
	}
}
BENCHMARK(bm_nb_sample);

} // namespace

BENCHMARK_MAIN();
