#include "demandcast/gp_copula.hpp"

#include "demandcast/checkpoint.hpp"
#include "demandcast/covariates.hpp"
#include "demandcast/distributions.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace demandcast {

namespace {

constexpr double kDFloor = 1e-6;
constexpr double kGradClip = 10.0;

double softplus_plain(double x) {
	if (x > 30.0) return x;
	if (x < -30.0) return std::exp(x);
	return std::log1p(std::exp(x));
}

} // namespace

EmpiricalCdf EmpiricalCdf::from_counts(std::span<const std::int64_t> counts) {
	if (counts.empty()) {
		throw ContractError("empirical cdf of an empty series");
	}
	std::vector<double> sorted(counts.begin(), counts.end());
	std::sort(sorted.begin(), sorted.end());
	const std::size_t n = sorted.size();

	EmpiricalCdf out;
	out.n_ = n;
	out.train_max_ = sorted.back();
	// collapse ties: each unique value keeps its mid-rank position
	std::size_t i = 0;
	while (i < n) {
		std::size_t j = i;
		while (j < n && sorted[j] == sorted[i]) {
			++j;
		}
		out.values_.push_back(sorted[i]);
		out.us_.push_back((static_cast<double>(i) + static_cast<double>(j)) / (2.0 * n));
		i = j;
	}
	return out;
}

EmpiricalCdf EmpiricalCdf::from_knots(std::vector<double> values, std::vector<double> us,
                                      std::size_t n) {
	if (values.size() != us.size() || values.empty()) {
		throw ContractError("empirical cdf knots malformed");
	}
	EmpiricalCdf out;
	out.values_ = std::move(values);
	out.us_ = std::move(us);
	out.n_ = n;
	out.train_max_ = out.values_.back();
	return out;
}

double EmpiricalCdf::cdf(double y) const {
	// interpolate between knots; matches the mid-rank value exactly on them
	if (y <= values_.front()) {
		return y == values_.front() ? us_.front() : us_.front() * 0.5;
	}
	if (y >= values_.back()) {
		return y == values_.back() ? us_.back() : us_.back() + (1.0 - us_.back()) * 0.5;
	}
	const auto it = std::lower_bound(values_.begin(), values_.end(), y);
	const std::size_t hi = static_cast<std::size_t>(it - values_.begin());
	if (values_[hi] == y) {
		return us_[hi];
	}
	const std::size_t lo = hi - 1;
	const double f = (y - values_[lo]) / (values_[hi] - values_[lo]);
	return us_[lo] + f * (us_[hi] - us_[lo]);
}

double EmpiricalCdf::inverse(double u) const {
	double y;
	if (values_.size() == 1) {
		y = values_.front();
	} else if (u <= us_.front()) {
		const double slope = (values_[1] - values_[0]) / (us_[1] - us_[0]);
		y = values_.front() + (u - us_.front()) * slope;
	} else if (u >= us_.back()) {
		const std::size_t k = values_.size() - 1;
		const double slope = (values_[k] - values_[k - 1]) / (us_[k] - us_[k - 1]);
		y = values_.back() + (u - us_.back()) * slope;
	} else {
		const auto it = std::lower_bound(us_.begin(), us_.end(), u);
		const std::size_t hi = static_cast<std::size_t>(it - us_.begin());
		if (us_[hi] == u) {
			return values_[hi];
		}
		const std::size_t lo = hi - 1;
		const double f = (u - us_[lo]) / (us_[hi] - us_[lo]);
		y = values_[lo] + f * (values_[hi] - values_[lo]);
	}
	return std::clamp(y, 0.0, 2.0 * train_max_);
}

GPCopulaModel GPCopulaModel::init_untrained(const Panel& train, const GPCopulaConfig& cfg) {
	if (cfg.epochs < 1 || cfg.series_batch < 1 || cfg.rank < 1 || cfg.hidden_size < 1 ||
	    cfg.layers < 1 || cfg.context_length < 1) {
		throw ConfigError("gp_copula: config fields must be positive");
	}
	if (train.num_series() < 2) {
		throw ConfigError("gp_copula: needs at least two series");
	}
	if (cfg.rank > train.num_series()) {
		throw ConfigError("gp_copula: rank exceeds the number of series");
	}
	const std::size_t window = cfg.context_length + cfg.horizon;
	if (static_cast<std::size_t>(train.calendar().length) < window + 1) {
		throw HistoryError("gp_copula: series shorter than context + horizon + 1");
	}

	GPCopulaModel m;
	m.cfg_ = cfg;
	m.vocab_ = CategoryVocab::from_panel(train);
	m.train_calendar_ = train.calendar();

	for (const auto& [key, counts] : train.series()) {
		EmpiricalCdf cdf = EmpiricalCdf::from_counts(counts);
		if (cdf.degenerate()) {
			m.dropped_.insert(key);
			m.constant_level_[key] = static_cast<double>(counts.front());
		} else {
			m.cdfs_.emplace(key, std::move(cdf));
		}
	}
	if (m.cdfs_.size() < 2) {
		throw ConfigError("gp_copula: fewer than two non-degenerate series");
	}

	auto rng = make_engine(derive_seed(cfg.seed, "gp_copula.init"));
	const std::size_t dp = m.vocab_.profession_embed_dim();
	const std::size_t dm = m.vocab_.module_embed_dim();
	const std::size_t input = 1 + 4 + dp + dm;
	const std::size_t H = cfg.hidden_size;

	m.prof_table_ = ad::make_tensor({m.vocab_.professions().size(), dp}, true, "gp_copula.prof");
	m.module_table_ = ad::make_tensor({m.vocab_.modules().size(), dm}, true, "gp_copula.module");
	ad::fill_uniform(*m.prof_table_, 0.1, rng);
	ad::fill_uniform(*m.module_table_, 0.1, rng);
	m.lstm_ = ad::LstmParams::init(input, H, cfg.layers, rng, "gp_copula.lstm");
	m.w_mu_ = ad::make_tensor({H, 1}, true, "gp_copula.w_mu");
	m.b_mu_ = ad::make_tensor({1}, true, "gp_copula.b_mu");
	m.w_d_ = ad::make_tensor({H, 1}, true, "gp_copula.w_d");
	m.b_d_ = ad::make_tensor({1}, true, "gp_copula.b_d");
	m.w_v_ = ad::make_tensor({H, cfg.rank}, true, "gp_copula.w_v");
	ad::fill_uniform(*m.w_mu_, std::sqrt(6.0 / static_cast<double>(H + 1)), rng);
	ad::fill_uniform(*m.w_d_, std::sqrt(6.0 / static_cast<double>(H + 1)), rng);
	ad::fill_uniform(*m.w_v_, std::sqrt(6.0 / static_cast<double>(H + cfg.rank)) * 0.1, rng);
	m.b_d_->value[0] = 0.5413; // softplus ~ 1: start near the standard normal marginal
	return m;
}

GPCopulaModel GPCopulaModel::fit(const Panel& train, const GPCopulaConfig& cfg) {
	GPCopulaModel m = init_untrained(train, cfg);
	m.train_epochs(train);
	return m;
}

std::vector<ad::Tensor> GPCopulaModel::parameters() const {
	auto out = lstm_.parameters();
	out.push_back(w_mu_);
	out.push_back(b_mu_);
	out.push_back(w_d_);
	out.push_back(b_d_);
	out.push_back(w_v_);
	out.push_back(prof_table_);
	out.push_back(module_table_);
	return out;
}

namespace {

struct CopulaSeries {
	SeriesKey key;
	std::vector<double> z; // Gaussian scores of the counts
	std::size_t prof_id;
	std::size_t module_id;
};

} // namespace

void GPCopulaModel::train_epochs(const Panel& train) {
	const std::size_t T = static_cast<std::size_t>(train.calendar().length);
	const std::size_t window = cfg_.context_length + cfg_.horizon;
	const auto covs = covariates_for(train_calendar_, 0, train_calendar_.length);

	std::vector<CopulaSeries> series;
	for (const auto& [key, counts] : train.series()) {
		const auto it = cdfs_.find(key);
		if (it == cdfs_.end()) {
			continue;
		}
		CopulaSeries cs;
		cs.key = key;
		cs.prof_id = vocab_.profession_id(key.profession);
		cs.module_id = vocab_.module_id(key.module);
		cs.z.resize(T);
		for (std::size_t t = 0; t < T; ++t) {
			cs.z[t] = normal_quantile(it->second.cdf(static_cast<double>(counts[t])));
		}
		series.push_back(std::move(cs));
	}

	auto rng = make_engine(derive_seed(cfg_.seed, "gp_copula.train"));
	ad::AdamState adam(cfg_.learning_rate);
	const auto params = parameters();

	const std::size_t wins_per_series = std::max<std::size_t>(1, (T - window) / cfg_.horizon);
	std::vector<std::size_t> series_order(series.size());
	for (std::size_t i = 0; i < series_order.size(); ++i) series_order[i] = i;

	for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
		std::shuffle(series_order.begin(), series_order.end(), rng);
		std::uniform_int_distribution<std::size_t> start_dist(1, T - window);
		double epoch_sum = 0.0;
		std::size_t steps = 0;
		for (std::size_t off = 0; off < series_order.size(); off += cfg_.series_batch) {
			const std::size_t b = std::min(cfg_.series_batch, series_order.size() - off);
			std::vector<std::size_t> rows(series_order.begin() + off,
			                              series_order.begin() + off + b);
			std::vector<std::size_t> prof_ids(b), module_ids(b);
			for (std::size_t i = 0; i < b; ++i) {
				prof_ids[i] = series[rows[i]].prof_id;
				module_ids[i] = series[rows[i]].module_id;
			}
			for (std::size_t win = 0; win < wins_per_series; ++win) {
				const std::size_t start = start_dist(rng);
				ad::Graph g;
				auto pe = ad::embed_lookup(g, prof_table_, prof_ids);
				auto me = ad::embed_lookup(g, module_table_, module_ids);
				auto state = ad::lstm_zero_state(lstm_, b);
				std::vector<ad::Tensor> step_nll;
				for (std::size_t t = start; t < start + window; ++t) {
					std::vector<double> prev(b), cov_flat(b * 4), z_now(b);
					for (std::size_t i = 0; i < b; ++i) {
						prev[i] = series[rows[i]].z[t - 1];
						z_now[i] = series[rows[i]].z[t];
						std::copy(covs.normalized[t].begin(), covs.normalized[t].end(),
						          &cov_flat[i * 4]);
					}
					auto prev_t = ad::make_tensor({b, 1}, std::move(prev));
					auto cov_t = ad::make_tensor({b, 4}, std::move(cov_flat));
					auto x = ad::concat_cols(g, {prev_t, cov_t, pe, me});
					auto h = ad::lstm_step(g, lstm_, x, state, true, cfg_.dropout, &rng);
					auto mu = ad::add(g, ad::matmul(g, h, w_mu_), b_mu_);
					auto d = ad::shift(
					    g, ad::softplus(g, ad::add(g, ad::matmul(g, h, w_d_), b_d_)), kDFloor);
					auto v = ad::matmul(g, h, w_v_);
					step_nll.push_back(
					    ad::scale(g, ad::lowrank_nll(g, z_now, mu, d, v, cfg_.rank),
					              1.0 / static_cast<double>(b)));
				}
				auto loss = ad::reduce_mean(g, ad::concat_rows(g, step_nll));
				if (!std::isfinite(loss->value[0])) {
					throw NumericsError("gp_copula: non-finite loss at epoch " +
					                    std::to_string(epoch));
				}
				ad::zero_all_grads(params);
				g.backward(loss);
				ad::clip_global_norm(params, kGradClip);
				adam.step(params);
				epoch_sum += loss->value[0];
				++steps;
			}
		}
		(void)epoch_sum;
		(void)steps;
		epoch_nll_.push_back(evaluate_nll(train));
	}
}

double GPCopulaModel::evaluate_nll(const Panel& panel) const {
	const std::size_t T = static_cast<std::size_t>(panel.calendar().length);
	if (T < 2) {
		throw HistoryError("gp_copula: evaluation needs at least two days");
	}
	const std::int64_t offset = train_calendar_.index_of(panel.calendar().start);
	const auto covs = covariates_for(train_calendar_, offset, offset + static_cast<std::int64_t>(T));

	std::vector<CopulaSeries> series;
	for (const auto& [key, counts] : panel.series()) {
		const auto it = cdfs_.find(key);
		if (it == cdfs_.end()) {
			continue;
		}
		CopulaSeries cs;
		cs.key = key;
		cs.prof_id = vocab_.profession_id(key.profession);
		cs.module_id = vocab_.module_id(key.module);
		cs.z.resize(T);
		for (std::size_t t = 0; t < T; ++t) {
			cs.z[t] = normal_quantile(it->second.cdf(static_cast<double>(counts[t])));
		}
		series.push_back(std::move(cs));
	}
	if (series.empty()) {
		throw ContractError("gp_copula: no modeled series in evaluation panel");
	}

	const std::size_t dp = vocab_.profession_embed_dim();
	const std::size_t dm = vocab_.module_embed_dim();
	const std::size_t H = cfg_.hidden_size;

	double total = 0.0;
	std::size_t count = 0;
	for (std::size_t off = 0; off < series.size(); off += cfg_.series_batch) {
		const std::size_t b = std::min(cfg_.series_batch, series.size() - off);
		std::vector<ad::LstmPlainState> states(b, ad::lstm_plain_zero_state(lstm_));
		std::vector<double> mu(b), dvec(b), v(b * cfg_.rank), z_now(b);
		std::vector<double> x(1 + 4 + dp + dm);
		for (std::size_t t = 1; t < T; ++t) {
			for (std::size_t i = 0; i < b; ++i) {
				const auto& cs = series[off + i];
				std::size_t c = 0;
				x[c++] = cs.z[t - 1];
				for (const double cv : covs.normalized[t]) x[c++] = cv;
				const double* pe = &prof_table_->value[cs.prof_id * dp];
				const double* me = &module_table_->value[cs.module_id * dm];
				for (std::size_t j = 0; j < dp; ++j) x[c++] = pe[j];
				for (std::size_t j = 0; j < dm; ++j) x[c++] = me[j];
				const auto h = lstm_step_plain(lstm_, x, states[i]);
				double zm = b_mu_->value[0], zd = b_d_->value[0];
				for (std::size_t j = 0; j < H; ++j) {
					zm += h[j] * w_mu_->value[j];
					zd += h[j] * w_d_->value[j];
				}
				mu[i] = zm;
				dvec[i] = softplus_plain(zd) + kDFloor;
				for (std::size_t k = 0; k < cfg_.rank; ++k) {
					double zv = 0.0;
					for (std::size_t j = 0; j < H; ++j) {
						zv += h[j] * w_v_->value[j * cfg_.rank + k];
					}
					v[i * cfg_.rank + k] = zv;
				}
				z_now[i] = cs.z[t];
			}
			total += -lowrank_gaussian_logpdf(z_now, mu, dvec, v, cfg_.rank) /
			         static_cast<double>(b);
			++count;
		}
	}
	return total / static_cast<double>(count);
}

std::map<SeriesKey, ForecastDistribution> GPCopulaModel::forecast_all(const Panel& history,
                                                                      std::size_t horizon,
                                                                      std::size_t paths,
                                                                      std::uint64_t seed) const {
	if (horizon < 1 || paths < 1) {
		throw ContractError("gp_copula: horizon and paths must be >= 1");
	}
	const std::size_t T = static_cast<std::size_t>(history.calendar().length);
	if (T < cfg_.context_length + 1) {
		throw HistoryError("gp_copula: history shorter than context length + 1");
	}
	const std::int64_t offset = train_calendar_.index_of(history.calendar().start);
	const auto covs = covariates_for(train_calendar_, offset,
	                                 offset + static_cast<std::int64_t>(T + horizon));

	const std::size_t dp = vocab_.profession_embed_dim();
	const std::size_t dm = vocab_.module_embed_dim();
	const std::size_t H = cfg_.hidden_size;
	const std::size_t r = cfg_.rank;

	struct Live {
		const SeriesKey* key;
		const EmpiricalCdf* cdf;
		std::vector<double> z_hist;
		std::size_t prof_id, module_id;
		ad::LstmPlainState context_state;
	};
	std::vector<Live> live;
	for (const auto& [key, counts] : history.series()) {
		const auto it = cdfs_.find(key);
		if (it == cdfs_.end()) {
			continue;
		}
		Live lv;
		lv.key = &key;
		lv.cdf = &it->second;
		lv.prof_id = vocab_.profession_id(key.profession);
		lv.module_id = vocab_.module_id(key.module);
		lv.z_hist.resize(T);
		for (std::size_t t = 0; t < T; ++t) {
			lv.z_hist[t] = normal_quantile(it->second.cdf(static_cast<double>(counts[t])));
		}
		lv.context_state = ad::lstm_plain_zero_state(lstm_);
		live.push_back(std::move(lv));
	}
	const std::size_t n = live.size();

	// condition every series' state on its observed context
	std::vector<double> x(1 + 4 + dp + dm);
	for (auto& lv : live) {
		for (std::size_t t = T - cfg_.context_length; t < T; ++t) {
			std::size_t c = 0;
			x[c++] = lv.z_hist[t - 1];
			for (const double cv : covs.normalized[t]) x[c++] = cv;
			const double* pe = &prof_table_->value[lv.prof_id * dp];
			const double* me = &module_table_->value[lv.module_id * dm];
			for (std::size_t j = 0; j < dp; ++j) x[c++] = pe[j];
			for (std::size_t j = 0; j < dm; ++j) x[c++] = me[j];
			lstm_step_plain(lstm_, x, lv.context_state);
		}
	}

	std::vector<std::vector<std::vector<double>>> per_key_paths(
	    n, std::vector<std::vector<double>>(paths, std::vector<double>(horizon)));

	for (std::size_t s = 0; s < paths; ++s) {
		auto rng = make_engine(derive_seed(seed, "gp_copula.path", s));
		std::vector<ad::LstmPlainState> states;
		states.reserve(n);
		std::vector<double> z_prev(n);
		for (std::size_t i = 0; i < n; ++i) {
			states.push_back(live[i].context_state);
			z_prev[i] = live[i].z_hist[T - 1];
		}
		std::vector<double> mu(n), dvec(n), v(n * r);
		for (std::size_t hstep = 0; hstep < horizon; ++hstep) {
			for (std::size_t i = 0; i < n; ++i) {
				auto& lv = live[i];
				std::size_t c = 0;
				x[c++] = z_prev[i];
				for (const double cv : covs.normalized[T + hstep]) x[c++] = cv;
				const double* pe = &prof_table_->value[lv.prof_id * dp];
				const double* me = &module_table_->value[lv.module_id * dm];
				for (std::size_t j = 0; j < dp; ++j) x[c++] = pe[j];
				for (std::size_t j = 0; j < dm; ++j) x[c++] = me[j];
				const auto h = lstm_step_plain(lstm_, x, states[i]);
				double zm = b_mu_->value[0], zd = b_d_->value[0];
				for (std::size_t j = 0; j < H; ++j) {
					zm += h[j] * w_mu_->value[j];
					zd += h[j] * w_d_->value[j];
				}
				mu[i] = zm;
				dvec[i] = softplus_plain(zd) + kDFloor;
				for (std::size_t k = 0; k < r; ++k) {
					double zv = 0.0;
					for (std::size_t j = 0; j < H; ++j) {
						zv += h[j] * w_v_->value[j * r + k];
					}
					v[i * r + k] = zv;
				}
			}
			const auto z_draw = lowrank_gaussian_sample(rng, mu, dvec, v, r);
			for (std::size_t i = 0; i < n; ++i) {
				const double y = live[i].cdf->inverse(normal_cdf(z_draw[i]));
				per_key_paths[i][s][hstep] = y;
				z_prev[i] = z_draw[i];
			}
		}
	}

	std::map<SeriesKey, ForecastDistribution> out;
	for (std::size_t i = 0; i < n; ++i) {
		out.emplace(*live[i].key,
		            ForecastDistribution::from_samples(std::move(per_key_paths[i]), true));
	}
	// degenerate series forecast their constant level with a zero-width band
	for (const auto& key : dropped_) {
		if (history.series().find(key) == history.series().end()) {
			continue;
		}
		const auto lit = constant_level_.find(key);
		const double level = lit != constant_level_.end() ? lit->second : 0.0;
		out.emplace(key, ForecastDistribution::residual_offsets(
		                     std::vector<double>(horizon, level), {}, true));
	}
	return out;
}

const EmpiricalCdf& GPCopulaModel::cdf_for(const SeriesKey& key) const {
	const auto it = cdfs_.find(key);
	if (it == cdfs_.end()) {
		throw CategoryError("gp_copula: no cdf for key " + key.to_string());
	}
	return it->second;
}

void GPCopulaModel::save(const std::string& path_prefix) const {
	save_checkpoint(path_prefix + ".bin", "gp_copula", parameters());
	nlohmann::ordered_json manifest;
	manifest["model"] = "gp_copula";
	manifest["config"] = {{"hidden_size", cfg_.hidden_size},
	                      {"layers", cfg_.layers},
	                      {"dropout", cfg_.dropout},
	                      {"epochs", cfg_.epochs},
	                      {"rank", cfg_.rank},
	                      {"series_batch", cfg_.series_batch},
	                      {"context_length", cfg_.context_length},
	                      {"horizon", cfg_.horizon},
	                      {"sample_paths", cfg_.sample_paths},
	                      {"learning_rate", cfg_.learning_rate},
	                      {"seed", cfg_.seed}};
	manifest["professions"] = vocab_.professions();
	manifest["modules"] = vocab_.modules();
	manifest["calendar"] = {{"start", train_calendar_.start.to_iso()},
	                        {"length", train_calendar_.length}};
	nlohmann::ordered_json series = nlohmann::ordered_json::array();
	for (const auto& [key, cdf] : cdfs_) {
		series.push_back({{"profession", key.profession},
		                  {"module", key.module},
		                  {"region", key.region},
		                  {"cdf_values", cdf.knot_values()},
		                  {"cdf_us", cdf.knot_us()}});
	}
	manifest["series"] = std::move(series);
	nlohmann::ordered_json dropped = nlohmann::ordered_json::array();
	for (const auto& key : dropped_) {
		dropped.push_back({{"profession", key.profession},
		                   {"module", key.module},
		                   {"region", key.region},
		                   {"level", constant_level_.at(key)}});
	}
	manifest["dropped"] = std::move(dropped);
	std::ofstream out(path_prefix + ".json");
	if (!out) {
		throw FormatError("cannot write manifest " + path_prefix + ".json");
	}
	out << manifest.dump(2) << "\n";
}

GPCopulaModel GPCopulaModel::load(const std::string& path_prefix) {
	std::ifstream in(path_prefix + ".json");
	if (!in) {
		throw FormatError("cannot read manifest " + path_prefix + ".json");
	}
	const auto manifest = nlohmann::json::parse(in);
	GPCopulaModel m;
	const auto& c = manifest.at("config");
	m.cfg_.hidden_size = c.at("hidden_size").get<std::size_t>();
	m.cfg_.layers = c.at("layers").get<std::size_t>();
	m.cfg_.dropout = c.at("dropout").get<double>();
	m.cfg_.epochs = c.at("epochs").get<std::size_t>();
	m.cfg_.rank = c.at("rank").get<std::size_t>();
	m.cfg_.series_batch = c.at("series_batch").get<std::size_t>();
	m.cfg_.context_length = c.at("context_length").get<std::size_t>();
	m.cfg_.horizon = c.at("horizon").get<std::size_t>();
	m.cfg_.sample_paths = c.at("sample_paths").get<std::size_t>();
	m.cfg_.learning_rate = c.at("learning_rate").get<double>();
	m.cfg_.seed = c.at("seed").get<std::uint64_t>();
	m.vocab_ = CategoryVocab::from_lists(manifest.at("professions").get<std::vector<std::string>>(),
	                                     manifest.at("modules").get<std::vector<std::string>>());
	m.train_calendar_ = Calendar{Date::parse(manifest.at("calendar").at("start").get<std::string>()),
	                             manifest.at("calendar").at("length").get<std::int64_t>()};
	for (const auto& entry : manifest.at("series")) {
		const SeriesKey key{entry.at("profession").get<std::string>(),
		                    entry.at("module").get<std::string>(),
		                    entry.at("region").get<std::string>()};
		auto values = entry.at("cdf_values").get<std::vector<double>>();
		auto us = entry.at("cdf_us").get<std::vector<double>>();
		m.cdfs_.emplace(key, EmpiricalCdf::from_knots(std::move(values), std::move(us),
		                                              static_cast<std::size_t>(
		                                                  m.train_calendar_.length)));
	}
	for (const auto& entry : manifest.at("dropped")) {
		const SeriesKey key{entry.at("profession").get<std::string>(),
		                    entry.at("module").get<std::string>(),
		                    entry.at("region").get<std::string>()};
		m.dropped_.insert(key);
		m.constant_level_[key] = entry.at("level").get<double>();
	}

	auto loaded = load_checkpoint(path_prefix + ".bin");
	if (loaded.model_name != "gp_copula") {
		throw FormatError("checkpoint model mismatch: expected gp_copula, got " +
		                  loaded.model_name);
	}
	auto take = [&loaded](const std::string& name) {
		const auto it = loaded.tensors.find(name);
		if (it == loaded.tensors.end()) {
			throw FormatError("checkpoint missing tensor " + name);
		}
		it->second->requires_grad = true;
		return it->second;
	};
	m.lstm_.input_size = 1 + 4 + m.vocab_.profession_embed_dim() + m.vocab_.module_embed_dim();
	m.lstm_.hidden_size = m.cfg_.hidden_size;
	for (std::size_t l = 0; l < m.cfg_.layers; ++l) {
		const std::string tag = "gp_copula.lstm.l" + std::to_string(l);
		m.lstm_.layers.push_back(
		    ad::LstmLayerParams{take(tag + ".w_ih"), take(tag + ".w_hh"), take(tag + ".bias")});
	}
	m.w_mu_ = take("gp_copula.w_mu");
	m.b_mu_ = take("gp_copula.b_mu");
	m.w_d_ = take("gp_copula.w_d");
	m.b_d_ = take("gp_copula.b_d");
	m.w_v_ = take("gp_copula.w_v");
	m.prof_table_ = take("gp_copula.prof");
	m.module_table_ = take("gp_copula.module");
	return m;
}

} // namespace demandcast
