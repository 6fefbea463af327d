#include "demandcast/deepar.hpp"
#include "demandcast/embed_nn.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/gp_copula.hpp"
#include "demandcast/rng.hpp"
#include "demandcast/metrics.hpp"
#include "demandcast/split.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace demandcast;

namespace {

Panel constant_panel(std::vector<std::pair<SeriesKey, std::int64_t>> levels, std::int64_t days) {
	Calendar cal{Date(2020, 1, 1), days};
	std::map<SeriesKey, std::vector<std::int64_t>> series;
	for (const auto& [key, level] : levels) {
		series.emplace(key, std::vector<std::int64_t>(days, level));
	}
	return Panel(cal, std::move(series));
}

Panel noisy_panel(std::size_t n_series, std::int64_t days, std::uint64_t seed,
                  double base = 8.0) {
	Calendar cal{Date(2020, 1, 1), days};
	auto rng = make_engine(seed);
	std::map<SeriesKey, std::vector<std::int64_t>> series;
	for (std::size_t s = 0; s < n_series; ++s) {
		std::vector<std::int64_t> counts(days);
		for (std::int64_t t = 0; t < days; ++t) {
			const double lam =
			    base * (1.0 + 0.4 * std::sin(2.0 * M_PI * static_cast<double>(t % 7) / 7.0));
			std::poisson_distribution<std::int64_t> pois(lam);
			counts[t] = pois(rng);
		}
		series.emplace(SeriesKey{"prof_" + std::to_string(s % 2 + 1),
		                         "module_" + std::to_string(s + 1), "all"},
		               std::move(counts));
	}
	return Panel(cal, std::move(series));
}

} // namespace

TEST_CASE("embed_nn learns a constant panel to within 5%") {
	const SeriesKey ka{"midwife", "m1", "all"};
	const SeriesKey kb{"nurse", "m2", "all"};
	const Panel train = constant_panel({{ka, 10}, {kb, 20}}, 90);

	EmbedNNConfig cfg;
	cfg.hidden = {32, 16};
	cfg.epochs = 80;
	cfg.batch_size = 32;
	cfg.seed = 7;
	const EmbedNNModel m = EmbedNNModel::fit(train, nullptr, cfg);
	const auto fa = m.predict(ka, 90, 10);
	const auto fb = m.predict(kb, 90, 10);
	for (int h = 0; h < 10; ++h) {
		CHECK(std::fabs(fa.point()[h] - 10.0) / 10.0 < 0.05);
		CHECK(std::fabs(fb.point()[h] - 20.0) / 20.0 < 0.05);
	}
}

TEST_CASE("embed_nn separates disjoint categorical levels") {
	const SeriesKey ka{"prof_a", "m", "all"};
	const SeriesKey kb{"prof_b", "m", "all"};
	const Panel train = constant_panel({{ka, 5}, {kb, 15}}, 80);
	EmbedNNConfig cfg;
	cfg.hidden = {24, 12};
	cfg.epochs = 60;
	cfg.batch_size = 32;
	cfg.seed = 11;
	const EmbedNNModel m = EmbedNNModel::fit(train, nullptr, cfg);
	const auto fa = m.predict(ka, 80, 5);
	const auto fb = m.predict(kb, 80, 5);
	for (int h = 0; h < 5; ++h) {
		CHECK(std::fabs(fa.point()[h] - 5.0) / 5.0 < 0.10);
		CHECK(std::fabs(fb.point()[h] - 15.0) / 15.0 < 0.10);
	}
	// categories with different levels keep distinct embeddings
	const auto params = m.parameters();
	const auto& table = params[0]; // profession table
	REQUIRE(table->shape[0] == 2);
	double dist = 0.0;
	for (std::size_t j = 0; j < table->shape[1]; ++j) {
		const double d = table->value[j] - table->value[table->shape[1] + j];
		dist += d * d;
	}
	CHECK(std::sqrt(dist) > 0.0);
}

TEST_CASE("embed_nn config validation and category errors") {
	const Panel train = constant_panel({{SeriesKey{"p", "m", "all"}, 5}}, 40);
	EmbedNNConfig cfg;
	cfg.epochs = 0;
	CHECK_THROWS_AS(EmbedNNModel::fit(train, nullptr, cfg), ConfigError);

	cfg.epochs = 1;
	cfg.hidden = {8, 4};
	const EmbedNNModel m = EmbedNNModel::fit(train, nullptr, cfg);
	CHECK_THROWS_AS(m.predict(SeriesKey{"unseen", "m", "all"}, 40, 5), CategoryError);
	CHECK(m.scale_for(SeriesKey{"p", "m", "all"}) == doctest::Approx(5.0));
}

TEST_CASE("embed_nn interval width equals the validation residual IQR") {
	const SeriesKey key{"p", "m", "all"};
	Calendar cal{Date(2020, 1, 1), 100};
	auto rng = make_engine(3);
	std::map<SeriesKey, std::vector<std::int64_t>> series;
	std::vector<std::int64_t> counts(100);
	std::poisson_distribution<std::int64_t> pois(50.0);
	for (auto& c : counts) c = pois(rng);
	series.emplace(key, std::move(counts));
	const Panel panel(cal, std::move(series));
	const auto parts = split(panel, SplitSpec{Date(2020, 3, 21), 10, 20});

	EmbedNNConfig cfg;
	cfg.hidden = {16, 8};
	cfg.epochs = 30;
	cfg.seed = 5;
	const EmbedNNModel m = EmbedNNModel::fit(parts.train, &parts.validation, cfg);
	const auto fc = m.predict(key, 80, 10);
	const auto q25 = fc.quantile(0.25);
	const auto q75 = fc.quantile(0.75);

	// reproduce the residuals independently
	const auto val_fc = m.predict(key, 60, 20);
	std::vector<double> resid;
	for (int t = 0; t < 20; ++t) {
		resid.push_back(static_cast<double>(parts.validation.counts(key)[t]) - val_fc.point()[t]);
	}
	const double iqr = empirical_quantile(resid, 0.75) - empirical_quantile(resid, 0.25);
	CHECK(q75[0] - q25[0] == doctest::Approx(iqr).epsilon(1e-9));
	// count-domain clamp
	for (const double v : fc.point()) {
		CHECK(v >= 0.0);
	}
}

TEST_CASE("deepar per-series scale rule") {
	const SeriesKey key{"p", "m", "all"};
	const Panel train = constant_panel({{key, 5}, {SeriesKey{"q", "m", "all"}, 3}}, 80);
	DeepARConfig cfg;
	cfg.hidden_size = 4;
	cfg.layers = 1;
	cfg.epochs = 1;
	cfg.context_length = 10;
	cfg.horizon = 10;
	cfg.batch_size = 4;
	const DeepARModel m = DeepARModel::init_untrained(train, cfg);
	CHECK(m.scale_for(key) == doctest::Approx(6.0)); // nu = 1 + mean
	CHECK(m.scale_for(SeriesKey{"q", "m", "all"}) == doctest::Approx(4.0));
}

TEST_CASE("deepar trains: trained loss beats the untrained model") {
	const Panel train = noisy_panel(4, 120, 17);
	DeepARConfig cfg;
	cfg.hidden_size = 8;
	cfg.layers = 2;
	cfg.epochs = 3;
	cfg.batch_size = 8;
	cfg.context_length = 20;
	cfg.horizon = 10;
	cfg.seed = 23;
	const DeepARModel untrained = DeepARModel::init_untrained(train, cfg);
	const double before = untrained.evaluate_nll(train);
	const DeepARModel trained = DeepARModel::fit(train, cfg);
	const double after = trained.evaluate_nll(train);
	CHECK(after < before);
	CHECK(trained.epoch_training_nll().size() == 3);
}

TEST_CASE("deepar rejects too-short series and bad config") {
	const Panel tiny = constant_panel({{SeriesKey{"p", "m", "all"}, 5},
	                                   {SeriesKey{"q", "m", "all"}, 6}}, 30);
	DeepARConfig cfg;
	cfg.context_length = 20;
	cfg.horizon = 15; // needs 36 days
	CHECK_THROWS_AS(DeepARModel::init_untrained(tiny, cfg), HistoryError);
	DeepARConfig bad;
	bad.epochs = 0;
	CHECK_THROWS_AS(DeepARModel::init_untrained(tiny, bad), ConfigError);
}

TEST_CASE("deepar forecasts are deterministic per seed with monotone quantiles") {
	const Panel train = noisy_panel(3, 100, 29);
	DeepARConfig cfg;
	cfg.hidden_size = 6;
	cfg.layers = 1;
	cfg.epochs = 2;
	cfg.batch_size = 8;
	cfg.context_length = 15;
	cfg.horizon = 10;
	cfg.seed = 31;
	const DeepARModel m = DeepARModel::fit(train, cfg);
	const auto key = train.keys().front();

	const auto f1 = m.forecast(key, train, 10, 40, 99);
	const auto f2 = m.forecast(key, train, 10, 40, 99);
	CHECK(f1.samples() == f2.samples());
	const auto f3 = m.forecast(key, train, 10, 1, 99);
	const auto f4 = m.forecast(key, train, 10, 1, 99);
	CHECK(f3.samples() == f4.samples());

	const auto q10 = f1.quantile(0.10);
	const auto q50 = f1.quantile(0.50);
	const auto q90 = f1.quantile(0.90);
	for (int h = 0; h < 10; ++h) {
		CHECK(q10[h] <= q50[h]);
		CHECK(q50[h] <= q90[h]);
		CHECK(q10[h] >= 0.0); // counts stay non-negative
	}
	// point is the per-step median of the sample paths
	CHECK(f1.point() == f1.quantile(0.5));
}

TEST_CASE("deepar training is bit-reproducible given the seed") {
	const Panel train = noisy_panel(3, 90, 41);
	DeepARConfig cfg;
	cfg.hidden_size = 5;
	cfg.layers = 1;
	cfg.epochs = 2;
	cfg.batch_size = 4;
	cfg.context_length = 12;
	cfg.horizon = 8;
	cfg.seed = 43;
	const DeepARModel m1 = DeepARModel::fit(train, cfg);
	const DeepARModel m2 = DeepARModel::fit(train, cfg);
	const auto p1 = m1.parameters();
	const auto p2 = m2.parameters();
	REQUIRE(p1.size() == p2.size());
	for (std::size_t i = 0; i < p1.size(); ++i) {
		CHECK(p1[i]->value == p2[i]->value);
	}
}

TEST_CASE("deepar scale absorbs a count rescaling at large levels") {
	// nu = 1 + mean, so c is absorbed up to O(1/mean); use a large level
	Calendar cal{Date(2020, 1, 1), 60};
	std::vector<std::int64_t> base(60);
	for (std::int64_t t = 0; t < 60; ++t) base[t] = 995 + (t % 11);
	std::vector<std::int64_t> doubled(60);
	for (std::int64_t t = 0; t < 60; ++t) doubled[t] = 2 * base[t];
	std::map<SeriesKey, std::vector<std::int64_t>> both{
	    {SeriesKey{"p", "m", "all"}, base}, {SeriesKey{"q", "m", "all"}, doubled}};
	const Panel pb(cal, std::move(both));

	DeepARConfig cfg;
	cfg.hidden_size = 4;
	cfg.layers = 1;
	cfg.epochs = 1;
	cfg.context_length = 10;
	cfg.horizon = 10;
	const DeepARModel m = DeepARModel::init_untrained(pb, cfg);
	const double nu1 = m.scale_for(SeriesKey{"p", "m", "all"});
	const double nu2 = m.scale_for(SeriesKey{"q", "m", "all"});
	double mean = 0.0;
	for (const auto v : base) mean += static_cast<double>(v);
	mean /= 60.0;
	CHECK(nu1 == doctest::Approx(1.0 + mean));
	CHECK(nu2 == doctest::Approx(1.0 + 2.0 * mean));
	// scaled inputs nearly coincide once c is absorbed
	for (std::int64_t t = 0; t < 60; ++t) {
		const double a = static_cast<double>(base[t]) / nu1;
		const double b = static_cast<double>(2 * base[t]) / nu2;
		CHECK(std::fabs(a - b) / a < 1e-3);
	}
}

TEST_CASE("deepar checkpoint round trip preserves behavior") {
	const Panel train = noisy_panel(3, 90, 53);
	DeepARConfig cfg;
	cfg.hidden_size = 5;
	cfg.layers = 2;
	cfg.epochs = 1;
	cfg.batch_size = 4;
	cfg.context_length = 12;
	cfg.horizon = 8;
	cfg.seed = 59;
	const DeepARModel m = DeepARModel::fit(train, cfg);
	const std::string prefix = "/tmp/demandcast_test_deepar_ckpt";
	m.save(prefix);
	const DeepARModel loaded = DeepARModel::load(prefix);
	CHECK(loaded.evaluate_nll(train) == doctest::Approx(m.evaluate_nll(train)).epsilon(1e-12));
	const auto key = train.keys().front();
	const auto f1 = m.forecast(key, train, 8, 5, 7);
	const auto f2 = loaded.forecast(key, train, 8, 5, 7);
	CHECK(f1.samples() == f2.samples());
	std::filesystem::remove(prefix + ".bin");
	std::filesystem::remove(prefix + ".json");
}

TEST_CASE("empirical cdf mid-ranks, inverse identity, degenerate detection") {
	const std::vector<std::int64_t> counts{1, 2, 3};
	const auto cdf = EmpiricalCdf::from_counts(counts);
	CHECK(cdf.cdf(2.0) == doctest::Approx(0.5)); // mid-rank of the middle value
	CHECK(cdf.cdf(1.0) == doctest::Approx(1.0 / 6.0));
	CHECK(cdf.cdf(3.0) == doctest::Approx(5.0 / 6.0));
	for (const double y : {1.0, 2.0, 3.0}) {
		CHECK(cdf.inverse(cdf.cdf(y)) == doctest::Approx(y).epsilon(1e-12));
	}
	// ties collapse to one knot at the averaged mid-rank
	const std::vector<std::int64_t> tied{4, 4, 4, 9};
	const auto tcdf = EmpiricalCdf::from_counts(tied);
	CHECK(tcdf.cdf(4.0) == doctest::Approx(3.0 / 8.0));
	CHECK(tcdf.inverse(tcdf.cdf(4.0)) == doctest::Approx(4.0));
	// extrapolation clamps to [0, 2 * max]
	CHECK(tcdf.inverse(0.999999) <= 18.0);
	CHECK(tcdf.inverse(1e-9) >= 0.0);

	CHECK(EmpiricalCdf::from_counts(std::vector<std::int64_t>{7, 7, 7}).degenerate());
}

TEST_CASE("gp_copula drops constant series and forecasts their level") {
	Calendar cal{Date(2020, 1, 1), 80};
	std::map<SeriesKey, std::vector<std::int64_t>> series;
	auto rng = make_engine(61);
	std::poisson_distribution<std::int64_t> pois(6.0);
	for (int s = 0; s < 3; ++s) {
		std::vector<std::int64_t> c(80);
		for (auto& v : c) v = pois(rng);
		series.emplace(SeriesKey{"p", "m" + std::to_string(s), "all"}, std::move(c));
	}
	series.emplace(SeriesKey{"p", "constant", "all"}, std::vector<std::int64_t>(80, 4));
	const Panel train(cal, std::move(series));

	GPCopulaConfig cfg;
	cfg.hidden_size = 6;
	cfg.layers = 1;
	cfg.epochs = 1;
	cfg.rank = 2;
	cfg.series_batch = 3;
	cfg.context_length = 12;
	cfg.horizon = 8;
	cfg.seed = 67;
	const GPCopulaModel m = GPCopulaModel::fit(train, cfg);
	CHECK(m.dropped_keys().count(SeriesKey{"p", "constant", "all"}) == 1);
	const auto all = m.forecast_all(train, 8, 10, 3);
	CHECK(all.size() == 4);
	const auto& const_fc = all.at(SeriesKey{"p", "constant", "all"});
	for (const double v : const_fc.point()) {
		CHECK(v == doctest::Approx(4.0));
	}
}

TEST_CASE("gp_copula with V zeroed forecasts independently across series") {
	const Panel train = noisy_panel(4, 120, 71, 20.0);
	GPCopulaConfig cfg;
	cfg.hidden_size = 6;
	cfg.layers = 1;
	cfg.epochs = 1;
	cfg.rank = 2;
	cfg.series_batch = 4;
	cfg.context_length = 15;
	cfg.horizon = 10;
	cfg.seed = 73;
	GPCopulaModel m = GPCopulaModel::init_untrained(train, cfg);
	for (const auto& p : m.parameters()) {
		if (p->name == "gp_copula.w_v") {
			std::fill(p->value.begin(), p->value.end(), 0.0);
		}
	}
	const std::size_t paths = 600;
	const auto all = m.forecast_all(train, 4, paths, 5);
	const auto keys = train.keys();
	const auto& fa = all.at(keys[0]).samples();
	const auto& fb = all.at(keys[1]).samples();
	// sample correlation at step 0 across paths
	double ma = 0, mb = 0;
	for (std::size_t s = 0; s < paths; ++s) {
		ma += fa[s][0];
		mb += fb[s][0];
	}
	ma /= paths;
	mb /= paths;
	double cab = 0, va = 0, vb = 0;
	for (std::size_t s = 0; s < paths; ++s) {
		cab += (fa[s][0] - ma) * (fb[s][0] - mb);
		va += (fa[s][0] - ma) * (fa[s][0] - ma);
		vb += (fb[s][0] - mb) * (fb[s][0] - mb);
	}
	const double corr = cab / std::sqrt(va * vb);
	CHECK(std::fabs(corr) < 0.13); // ~3 / sqrt(600)
	// samples stay non-negative
	for (const auto& path : fa) {
		for (const double v : path) {
			CHECK(v >= 0.0);
		}
	}
}

TEST_CASE("gp_copula nll decreases over epochs on a fixed seed") {
	const Panel train = noisy_panel(4, 130, 79, 12.0);
	GPCopulaConfig cfg;
	cfg.hidden_size = 8;
	cfg.layers = 2;
	cfg.epochs = 3;
	cfg.rank = 2;
	cfg.series_batch = 4;
	cfg.context_length = 20;
	cfg.horizon = 10;
	cfg.seed = 83;
	const GPCopulaModel m = GPCopulaModel::fit(train, cfg);
	const auto& nll = m.epoch_nll();
	REQUIRE(nll.size() == 3);
	CHECK(nll[1] < nll[0]);
	CHECK(nll[2] < nll[1]);
}

TEST_CASE("gp_copula checkpoint round trip preserves behavior") {
	const Panel train = noisy_panel(4, 110, 97, 10.0);
	GPCopulaConfig cfg;
	cfg.hidden_size = 5;
	cfg.layers = 2;
	cfg.epochs = 1;
	cfg.rank = 2;
	cfg.series_batch = 4;
	cfg.context_length = 12;
	cfg.horizon = 10;
	cfg.seed = 101;
	const GPCopulaModel m = GPCopulaModel::fit(train, cfg);
	const std::string prefix = "/tmp/demandcast_test_gpc_ckpt";
	m.save(prefix);
	const GPCopulaModel loaded = GPCopulaModel::load(prefix);
	CHECK(loaded.evaluate_nll(train) == doctest::Approx(m.evaluate_nll(train)).epsilon(1e-12));
	const auto f1 = m.forecast_all(train, 6, 4, 3);
	const auto f2 = loaded.forecast_all(train, 6, 4, 3);
	REQUIRE(f1.size() == f2.size());
	for (const auto& [key, fc] : f1) {
		CHECK(fc.samples() == f2.at(key).samples());
	}
	std::filesystem::remove(prefix + ".bin");
	std::filesystem::remove(prefix + ".json");
}

TEST_CASE("gp_copula rank validation") {
	const Panel train = noisy_panel(3, 80, 89);
	GPCopulaConfig cfg;
	cfg.rank = 5; // more than series
	cfg.context_length = 10;
	cfg.horizon = 10;
	CHECK_THROWS_AS(GPCopulaModel::init_untrained(train, cfg), ConfigError);
}
