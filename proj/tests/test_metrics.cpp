#include "demandcast/errors.hpp"
#include "demandcast/metrics.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace demandcast;

TEST_CASE("mase hand examples") {
	CHECK(*mase(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3},
	            std::vector<double>{1, 2, 1, 2}, 1) == doctest::Approx(0.0));
	// numerator 1, denominator mean(|2-1|,|1-2|,|2-1|) = 1
	CHECK(*mase(std::vector<double>{3, 3}, std::vector<double>{4, 4},
	            std::vector<double>{1, 2, 1, 2}, 1) == doctest::Approx(1.0));
	// constant seasonal history: undefined
	CHECK_FALSE(mase(std::vector<double>{1, 2}, std::vector<double>{1, 2},
	                 std::vector<double>{5, 5, 5, 5}, 1)
	                .has_value());
	CHECK_FALSE(mase(std::vector<double>{1, 2}, std::vector<double>{1, 2},
	                 std::vector<double>{3, 4, 3, 4}, 2)
	                .has_value());
}

TEST_CASE("mape hand examples and zero exclusion") {
	CHECK(*mape(std::vector<double>{100, 200}, std::vector<double>{110, 180}) ==
	      doctest::Approx(0.10));
	CHECK(*mape(std::vector<double>{7, 9}, std::vector<double>{7, 9}) == doctest::Approx(0.0));
	CHECK(*mape(std::vector<double>{0, 10}, std::vector<double>{5, 5}) == doctest::Approx(0.5));
	CHECK_FALSE(mape(std::vector<double>{0, 0}, std::vector<double>{1, 2}).has_value());
}

TEST_CASE("smape hand examples and bounds") {
	CHECK(smape(std::vector<double>{5, 6}, std::vector<double>{5, 6}) == doctest::Approx(0.0));
	CHECK(smape(std::vector<double>{10}, std::vector<double>{0}) == doctest::Approx(2.0));
	CHECK(smape(std::vector<double>{4, 6}, std::vector<double>{6, 4}) == doctest::Approx(0.4));
	CHECK(smape(std::vector<double>{0}, std::vector<double>{0}) == doctest::Approx(0.0));
}

TEST_CASE("rmse and mse") {
	const auto zero = rmse_mse(std::vector<double>{1, 2}, std::vector<double>{1, 2});
	CHECK(zero.rmse == doctest::Approx(0.0));
	CHECK(zero.mse == doctest::Approx(0.0));
	const auto rm = rmse_mse(std::vector<double>{0, 0}, std::vector<double>{3, 4});
	CHECK(rm.mse == doctest::Approx(12.5));
	CHECK(rm.rmse == doctest::Approx(3.5355339059));
	// constant offset c gives rmse |c|
	const auto off = rmse_mse(std::vector<double>{1, 2, 3}, std::vector<double>{-1, 0, 1});
	CHECK(off.rmse == doctest::Approx(2.0));
}

TEST_CASE("coverage") {
	CHECK(coverage(std::vector<double>{1, 2, 3}, std::vector<double>{0, 0, 0},
	               std::vector<double>{9, 9, 9}) == doctest::Approx(1.0));
	CHECK(coverage(std::vector<double>{1, 2, 3}, std::vector<double>{5, 5, 5},
	               std::vector<double>{9, 9, 9}) == doctest::Approx(0.0));
	CHECK(coverage(std::vector<double>{1, 2, 3, 10}, std::vector<double>{0, 0, 0, 0},
	               std::vector<double>{5, 5, 5, 5}) == doctest::Approx(0.75));
	CHECK_THROWS_AS(coverage(std::vector<double>{1}, std::vector<double>{2},
	                         std::vector<double>{1}),
	                QuantileOrderError);
}

TEST_CASE("smape symmetry and scale invariance properties") {
	std::mt19937_64 rng(17);
	std::uniform_real_distribution<double> val(0.0, 50.0), scale(0.1, 10.0);
	for (int rep = 0; rep < 200; ++rep) {
		const std::size_t n = 1 + rng() % 20;
		std::vector<double> a(n), f(n), hist(30);
		for (auto& v : a) v = val(rng);
		for (auto& v : f) v = val(rng);
		for (auto& v : hist) v = val(rng);

		CHECK(smape(a, f) == doctest::Approx(smape(f, a)).epsilon(1e-12));
		CHECK(smape(a, f) >= 0.0);
		CHECK(smape(a, f) <= 2.0);

		const double c = scale(rng);
		std::vector<double> ac(n), fc(n), hc(30);
		for (std::size_t i = 0; i < n; ++i) {
			ac[i] = c * a[i];
			fc[i] = c * f[i];
		}
		for (std::size_t i = 0; i < 30; ++i) hc[i] = c * hist[i];
		CHECK(smape(ac, fc) == doctest::Approx(smape(a, f)).epsilon(1e-9));
		const auto m1 = mape(a, f);
		const auto m2 = mape(ac, fc);
		if (m1 && m2) {
			CHECK(*m2 == doctest::Approx(*m1).epsilon(1e-9));
		}
		const auto s1 = mase(a, f, hist, 7);
		const auto s2 = mase(ac, fc, hc, 7);
		if (s1 && s2) {
			CHECK(*s2 == doctest::Approx(*s1).epsilon(1e-9));
		}
		CHECK(rmse_mse(ac, fc).rmse == doctest::Approx(c * rmse_mse(a, f).rmse).epsilon(1e-9));
	}
}

TEST_CASE("zero iff exact forecast") {
	std::vector<double> a{1, 4, 2, 8};
	CHECK(smape(a, a) == 0.0);
	CHECK(rmse_mse(a, a).mse == 0.0);
	std::vector<double> f{1, 4, 2, 8.001};
	CHECK(smape(a, f) > 0.0);
	CHECK(rmse_mse(a, f).mse > 0.0);
}

TEST_CASE("randomized equivalence against the brute-force oracle") {
	std::mt19937_64 rng(23);
	std::uniform_real_distribution<double> val(0.0, 100.0);
	std::uniform_int_distribution<int> len(1, 40), hist_len(8, 60), zero_chance(0, 4);
	for (int rep = 0; rep < 1000; ++rep) {
		const int n = len(rng);
		std::vector<double> a(n), f(n), hist(hist_len(rng));
		for (auto& v : a) v = zero_chance(rng) == 0 ? 0.0 : val(rng);
		for (auto& v : f) v = val(rng);
		for (auto& v : hist) v = zero_chance(rng) == 0 ? 0.0 : val(rng);

		const auto m1 = mase(a, f, hist, 7);
		const auto m2 = oracle::mase(a, f, hist, 7);
		CHECK(m1.has_value() == m2.has_value());
		if (m1) CHECK(*m1 == doctest::Approx(*m2).epsilon(1e-12));

		const auto p1 = mape(a, f);
		const auto p2 = oracle::mape(a, f);
		CHECK(p1.has_value() == p2.has_value());
		if (p1) CHECK(*p1 == doctest::Approx(*p2).epsilon(1e-12));

		CHECK(smape(a, f) == doctest::Approx(oracle::smape(a, f)).epsilon(1e-12));
		CHECK(rmse_mse(a, f).mse == doctest::Approx(oracle::mse(a, f)).epsilon(1e-12));
		CHECK(rmse_mse(a, f).rmse == doctest::Approx(oracle::rmse(a, f)).epsilon(1e-12));
	}
}

TEST_CASE("aggregate means, undefined skipping, monthly boxes") {
	MetricRecord r1;
	r1.key = SeriesKey{"p", "m", "all"};
	r1.origin = Date(2020, 6, 1);
	r1.model = "seasonal_naive";
	r1.mase = 1.0;
	r1.mape = 0.5;
	r1.smape = 0.4;
	r1.rmse = 2.0;
	r1.mse = 4.0;
	r1.coverage_50 = 0.5;

	// single record aggregates to itself
	const auto single = aggregate({r1});
	CHECK(single.per_model.size() == 1);
	CHECK(*single.per_model[0].mase == doctest::Approx(1.0));
	CHECK(single.per_model[0].count == 1);

	MetricRecord r2 = r1;
	r2.origin = Date(2020, 7, 1);
	r2.mase = 3.0;
	r2.mape = std::nullopt; // skipped, not zero-filled
	const auto two = aggregate({r1, r2});
	CHECK(*two.per_model[0].mase == doctest::Approx(2.0));
	CHECK(*two.per_model[0].mape == doctest::Approx(0.5));
	CHECK(two.per_model[0].count == 2);
	CHECK(two.monthly_mase.size() == 2);
	CHECK(two.monthly_mase.at({"seasonal_naive", "2020-06"}).median == doctest::Approx(1.0));
	CHECK(two.monthly_mase.at({"seasonal_naive", "2020-07"}).median == doctest::Approx(3.0));
}
