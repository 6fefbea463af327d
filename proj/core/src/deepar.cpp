#include "demandcast/deepar.hpp"

#include "demandcast/checkpoint.hpp"
#include "demandcast/covariates.hpp"
#include "demandcast/distributions.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace demandcast {

namespace {

constexpr double kParamFloor = 1e-9; // keeps mu, alpha strictly positive
constexpr double kGradClip = 10.0;

struct Window {
	const SeriesKey* key;
	std::size_t series_row; // index into per-panel arrays
	std::size_t start;      // first scored step; start >= 1 so y_{t-1} exists
};

double softplus_plain(double x) {
	if (x > 30.0) return x;
	if (x < -30.0) return std::exp(x);
	return std::log1p(std::exp(x));
}

} // namespace

DeepARModel DeepARModel::init_untrained(const Panel& train, const DeepARConfig& cfg) {
	if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.context_length < 1 || cfg.horizon < 1 ||
	    cfg.hidden_size < 1 || cfg.layers < 1) {
		throw ConfigError("deepar: config fields must be positive");
	}
	const std::size_t window = cfg.context_length + cfg.horizon;
	if (static_cast<std::size_t>(train.calendar().length) < window + 1) {
		throw HistoryError("deepar: every series needs at least context + horizon + 1 = " +
		                   std::to_string(window + 1) + " training days");
	}

	DeepARModel m;
	m.cfg_ = cfg;
	m.vocab_ = CategoryVocab::from_panel(train);
	m.train_calendar_ = train.calendar();

	for (const auto& [key, counts] : train.series()) {
		const double mean =
		    std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(counts.size());
		m.scales_[key] = 1.0 + mean;
	}

	auto rng = make_engine(derive_seed(cfg.seed, "deepar.init"));
	const std::size_t dp = m.vocab_.profession_embed_dim();
	const std::size_t dm = m.vocab_.module_embed_dim();
	const std::size_t input = 1 + 4 + dp + dm;

	m.prof_table_ = ad::make_tensor({m.vocab_.professions().size(), dp}, true, "deepar.prof");
	m.module_table_ = ad::make_tensor({m.vocab_.modules().size(), dm}, true, "deepar.module");
	ad::fill_uniform(*m.prof_table_, 0.1, rng);
	ad::fill_uniform(*m.module_table_, 0.1, rng);

	m.lstm_ = ad::LstmParams::init(input, cfg.hidden_size, cfg.layers, rng, "deepar.lstm");

	m.w_mu_ = ad::make_tensor({cfg.hidden_size, 1}, true, "deepar.w_mu");
	m.b_mu_ = ad::make_tensor({1}, true, "deepar.b_mu");
	m.w_alpha_ = ad::make_tensor({cfg.hidden_size, 1}, true, "deepar.w_alpha");
	m.b_alpha_ = ad::make_tensor({1}, true, "deepar.b_alpha");
	ad::fill_uniform(*m.w_mu_, std::sqrt(6.0 / static_cast<double>(cfg.hidden_size + 1)), rng);
	ad::fill_uniform(*m.w_alpha_, std::sqrt(6.0 / static_cast<double>(cfg.hidden_size + 1)), rng);
	m.b_mu_->value[0] = 0.5413; // softplus ~ 1, so initial mu ~ nu ~ series mean
	m.b_alpha_->value[0] = -0.433; // softplus ~ 0.5

	return m;
}

DeepARModel DeepARModel::fit(const Panel& train, const DeepARConfig& cfg) {
	DeepARModel m = init_untrained(train, cfg);
	m.train_epochs(train);
	return m;
}

std::vector<ad::Tensor> DeepARModel::parameters() const {
	auto out = lstm_.parameters();
	out.push_back(w_mu_);
	out.push_back(b_mu_);
	out.push_back(w_alpha_);
	out.push_back(b_alpha_);
	out.push_back(prof_table_);
	out.push_back(module_table_);
	return out;
}

void DeepARModel::train_epochs(const Panel& train) {
	const std::size_t window = cfg_.context_length + cfg_.horizon;
	const std::size_t T = static_cast<std::size_t>(train.calendar().length);
	const auto covs = covariates_for(train_calendar_, 0, train_calendar_.length);
	const auto keys = train.keys();

	struct SeriesData {
		std::vector<std::int64_t> counts;
		double scale;
		std::size_t prof_id;
		std::size_t module_id;
	};
	std::vector<SeriesData> data;
	data.reserve(keys.size());
	for (const auto& key : keys) {
		data.push_back(SeriesData{train.counts(key), scales_.at(key),
		                          vocab_.profession_id(key.profession),
		                          vocab_.module_id(key.module)});
	}

	auto rng = make_engine(derive_seed(cfg_.seed, "deepar.train"));
	ad::AdamState adam(cfg_.learning_rate);
	const auto params = parameters();
	const std::size_t dp = vocab_.profession_embed_dim();
	const std::size_t dm = vocab_.module_embed_dim();
	const std::size_t input = 1 + 4 + dp + dm;

	const std::size_t wins_per_series = std::max<std::size_t>(1, (T - window) / cfg_.horizon);

	for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
		// fresh uniformly drawn window starts each epoch
		std::vector<std::pair<std::size_t, std::size_t>> windows; // (series_row, start)
		std::uniform_int_distribution<std::size_t> start_dist(1, T - window);
		for (std::size_t row = 0; row < data.size(); ++row) {
			for (std::size_t k = 0; k < wins_per_series; ++k) {
				windows.emplace_back(row, start_dist(rng));
			}
		}
		std::shuffle(windows.begin(), windows.end(), rng);

		double epoch_sum = 0.0;
		std::size_t batches = 0;
		for (std::size_t off = 0; off < windows.size(); off += cfg_.batch_size) {
			const std::size_t b = std::min(cfg_.batch_size, windows.size() - off);

			std::vector<std::size_t> prof_ids(b), module_ids(b);
			std::vector<double> scales(b);
			for (std::size_t i = 0; i < b; ++i) {
				const auto& sd = data[windows[off + i].first];
				prof_ids[i] = sd.prof_id;
				module_ids[i] = sd.module_id;
				scales[i] = sd.scale;
			}

			ad::Graph g;
			auto scale_t = ad::make_tensor({b, 1}, scales);
			auto pe = ad::embed_lookup(g, prof_table_, prof_ids);
			auto me = ad::embed_lookup(g, module_table_, module_ids);
			auto state = ad::lstm_zero_state(lstm_, b);

			std::vector<ad::Tensor> step_mu, step_alpha;
			std::vector<std::int64_t> y_flat;
			y_flat.reserve(window * b);
			for (std::size_t t = 0; t < window; ++t) {
				std::vector<double> prev(b), cov_flat(b * 4);
				for (std::size_t i = 0; i < b; ++i) {
					const auto& [row, start] = windows[off + i];
					const std::size_t step = start + t;
					prev[i] = static_cast<double>(data[row].counts[step - 1]) / data[row].scale;
					std::copy(covs.normalized[step].begin(), covs.normalized[step].end(),
					          &cov_flat[i * 4]);
					y_flat.push_back(data[row].counts[step]);
				}
				auto prev_t = ad::make_tensor({b, 1}, std::move(prev));
				auto cov_t = ad::make_tensor({b, 4}, std::move(cov_flat));
				auto x = ad::concat_cols(g, {prev_t, cov_t, pe, me});
				(void)input;
				auto h = ad::lstm_step(g, lstm_, x, state, true, cfg_.dropout, &rng);
				auto mu_raw =
				    ad::shift(g, ad::softplus(g, ad::add(g, ad::matmul(g, h, w_mu_), b_mu_)), kParamFloor);
				auto mu = ad::mul(g, mu_raw, scale_t);
				auto alpha = ad::shift(
				    g, ad::softplus(g, ad::add(g, ad::matmul(g, h, w_alpha_), b_alpha_)), kParamFloor);
				step_mu.push_back(mu);
				step_alpha.push_back(alpha);
			}
			auto mu_all = ad::concat_rows(g, step_mu);
			auto alpha_all = ad::concat_rows(g, step_alpha);
			auto loss = ad::reduce_mean(g, ad::nb_nll(g, y_flat, mu_all, alpha_all));
			if (!std::isfinite(loss->value[0])) {
				throw NumericsError("deepar: non-finite loss at epoch " + std::to_string(epoch) +
				                    ", batch " + std::to_string(batches));
			}
			ad::zero_all_grads(params);
			g.backward(loss);
			ad::clip_global_norm(params, kGradClip);
			adam.step(params);
			epoch_sum += loss->value[0];
			++batches;
		}
		epoch_nll_.push_back(epoch_sum / static_cast<double>(std::max<std::size_t>(1, batches)));
	}
}

double DeepARModel::evaluate_nll(const Panel& panel) const {
	const std::size_t T = static_cast<std::size_t>(panel.calendar().length);
	if (T < 2) {
		throw HistoryError("deepar: evaluation needs at least two days");
	}
	const std::int64_t offset = train_calendar_.index_of(panel.calendar().start);
	if (offset < 0) {
		throw HistoryError("deepar: evaluation panel starts before the training calendar");
	}
	const auto covs = covariates_for(train_calendar_, offset, offset + static_cast<std::int64_t>(T));

	double total = 0.0;
	std::size_t count = 0;
	for (const auto& [key, counts] : panel.series()) {
		const auto sit = scales_.find(key);
		if (sit == scales_.end()) {
			throw CategoryError("deepar: key not seen in training: " + key.to_string());
		}
		const double nu = sit->second;
		const std::size_t pid = vocab_.profession_id(key.profession);
		const std::size_t mid = vocab_.module_id(key.module);
		const double* pe = &prof_table_->value[pid * vocab_.profession_embed_dim()];
		const double* me = &module_table_->value[mid * vocab_.module_embed_dim()];

		auto state = ad::lstm_plain_zero_state(lstm_);
		std::vector<double> x(1 + 4 + vocab_.profession_embed_dim() + vocab_.module_embed_dim());
		for (std::size_t t = 1; t < T; ++t) {
			std::size_t c = 0;
			x[c++] = static_cast<double>(counts[t - 1]) / nu;
			for (const double v : covs.normalized[t]) x[c++] = v;
			for (std::size_t j = 0; j < vocab_.profession_embed_dim(); ++j) x[c++] = pe[j];
			for (std::size_t j = 0; j < vocab_.module_embed_dim(); ++j) x[c++] = me[j];
			const auto h = lstm_step_plain(lstm_, x, state);
			const HeadOut head = plain_head(h);
			total += -neg_binomial_logpdf(counts[t], head.mu_raw * nu, head.alpha);
			++count;
		}
	}
	return total / static_cast<double>(count);
}

DeepARModel::HeadOut DeepARModel::plain_head(std::span<const double> h) const {
	double zm = b_mu_->value[0];
	double za = b_alpha_->value[0];
	for (std::size_t j = 0; j < h.size(); ++j) {
		zm += h[j] * w_mu_->value[j];
		za += h[j] * w_alpha_->value[j];
	}
	return HeadOut{softplus_plain(zm) + kParamFloor, softplus_plain(za) + kParamFloor};
}

ForecastDistribution DeepARModel::forecast(const SeriesKey& key, const Panel& history,
                                           std::size_t horizon, std::size_t paths,
                                           std::uint64_t seed) const {
	const auto sit = scales_.find(key);
	if (sit == scales_.end()) {
		throw CategoryError("deepar: key not seen in training: " + key.to_string());
	}
	if (horizon < 1 || paths < 1) {
		throw ContractError("deepar: horizon and paths must be >= 1");
	}
	const auto& counts = history.counts(key);
	const std::size_t T = counts.size();
	if (T < cfg_.context_length + 1) {
		throw HistoryError("deepar: history shorter than context length + 1");
	}
	const double nu = sit->second;
	const std::size_t pid = vocab_.profession_id(key.profession);
	const std::size_t mid = vocab_.module_id(key.module);
	const std::size_t dp = vocab_.profession_embed_dim();
	const std::size_t dm = vocab_.module_embed_dim();
	const double* pe = &prof_table_->value[pid * dp];
	const double* me = &module_table_->value[mid * dm];

	const std::int64_t hist_offset = train_calendar_.index_of(history.calendar().start);
	const auto covs =
	    covariates_for(train_calendar_, hist_offset, hist_offset + static_cast<std::int64_t>(T + horizon));

	// condition the state on the observed context
	auto state = ad::lstm_plain_zero_state(lstm_);
	std::vector<double> x(1 + 4 + dp + dm);
	auto fill_input = [&](double prev_scaled, std::size_t day_index) {
		std::size_t c = 0;
		x[c++] = prev_scaled;
		for (const double v : covs.normalized[day_index]) x[c++] = v;
		for (std::size_t j = 0; j < dp; ++j) x[c++] = pe[j];
		for (std::size_t j = 0; j < dm; ++j) x[c++] = me[j];
	};
	for (std::size_t t = T - cfg_.context_length; t < T; ++t) {
		fill_input(static_cast<double>(counts[t - 1]) / nu, t);
		lstm_step_plain(lstm_, x, state);
	}

	std::vector<std::vector<double>> sample_paths(paths);
	for (std::size_t s = 0; s < paths; ++s) {
		auto rng = make_engine(derive_seed(seed, "deepar.path", s));
		auto path_state = state;
		double prev = static_cast<double>(counts[T - 1]) / nu;
		auto& path = sample_paths[s];
		path.resize(horizon);
		for (std::size_t hstep = 0; hstep < horizon; ++hstep) {
			fill_input(prev, T + hstep);
			const auto h = lstm_step_plain(lstm_, x, path_state);
			const HeadOut head = plain_head(h);
			const std::int64_t draw = neg_binomial_sample(rng, head.mu_raw * nu, head.alpha);
			path[hstep] = static_cast<double>(draw);
			prev = static_cast<double>(draw) / nu;
		}
	}
	return ForecastDistribution::from_samples(std::move(sample_paths), true);
}

double DeepARModel::scale_for(const SeriesKey& key) const {
	const auto it = scales_.find(key);
	if (it == scales_.end()) {
		throw CategoryError("deepar: key not seen in training: " + key.to_string());
	}
	return it->second;
}

void DeepARModel::save(const std::string& path_prefix) const {
	save_checkpoint(path_prefix + ".bin", "deepar", parameters());
	nlohmann::ordered_json manifest;
	manifest["model"] = "deepar";
	manifest["config"] = {{"hidden_size", cfg_.hidden_size}, {"layers", cfg_.layers},
	                      {"dropout", cfg_.dropout},         {"epochs", cfg_.epochs},
	                      {"batch_size", cfg_.batch_size},   {"context_length", cfg_.context_length},
	                      {"horizon", cfg_.horizon},         {"sample_paths", cfg_.sample_paths},
	                      {"learning_rate", cfg_.learning_rate}, {"seed", cfg_.seed}};
	manifest["professions"] = vocab_.professions();
	manifest["modules"] = vocab_.modules();
	manifest["calendar"] = {{"start", train_calendar_.start.to_iso()},
	                        {"length", train_calendar_.length}};
	nlohmann::ordered_json scales = nlohmann::ordered_json::array();
	for (const auto& [key, nu] : scales_) {
		scales.push_back({{"profession", key.profession},
		                  {"module", key.module},
		                  {"region", key.region},
		                  {"scale", nu}});
	}
	manifest["series"] = std::move(scales);
	std::ofstream out(path_prefix + ".json");
	if (!out) {
		throw FormatError("cannot write manifest " + path_prefix + ".json");
	}
	out << manifest.dump(2) << "\n";
}

DeepARModel DeepARModel::load(const std::string& path_prefix) {
	std::ifstream in(path_prefix + ".json");
	if (!in) {
		throw FormatError("cannot read manifest " + path_prefix + ".json");
	}
	const auto manifest = nlohmann::json::parse(in);
	DeepARModel m;
	const auto& c = manifest.at("config");
	m.cfg_.hidden_size = c.at("hidden_size").get<std::size_t>();
	m.cfg_.layers = c.at("layers").get<std::size_t>();
	m.cfg_.dropout = c.at("dropout").get<double>();
	m.cfg_.epochs = c.at("epochs").get<std::size_t>();
	m.cfg_.batch_size = c.at("batch_size").get<std::size_t>();
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
		m.scales_[SeriesKey{entry.at("profession").get<std::string>(),
		                    entry.at("module").get<std::string>(),
		                    entry.at("region").get<std::string>()}] = entry.at("scale").get<double>();
	}

	auto loaded = load_checkpoint(path_prefix + ".bin");
	if (loaded.model_name != "deepar") {
		throw FormatError("checkpoint model mismatch: expected deepar, got " + loaded.model_name);
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
		const std::string tag = "deepar.lstm.l" + std::to_string(l);
		m.lstm_.layers.push_back(
		    ad::LstmLayerParams{take(tag + ".w_ih"), take(tag + ".w_hh"), take(tag + ".bias")});
	}
	m.w_mu_ = take("deepar.w_mu");
	m.b_mu_ = take("deepar.b_mu");
	m.w_alpha_ = take("deepar.w_alpha");
	m.b_alpha_ = take("deepar.b_alpha");
	m.prof_table_ = take("deepar.prof");
	m.module_table_ = take("deepar.module");
	return m;
}

} // namespace demandcast
