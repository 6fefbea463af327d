#include "demandcast/embed_nn.hpp"

#include "demandcast/checkpoint.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace demandcast {

namespace {

struct Sample {
	std::size_t prof_id;
	std::size_t module_id;
	std::array<double, 4> cov;
	double target; // scaled
	const SeriesKey* key;
};

} // namespace

ad::Tensor EmbedNNModel::forward(ad::Graph& g, const std::vector<std::size_t>& prof_ids,
                                 const std::vector<std::size_t>& module_ids,
                                 const std::vector<std::array<double, 4>>& covs) const {
	const std::size_t b = prof_ids.size();
	std::vector<double> cov_flat(b * 4);
	for (std::size_t i = 0; i < b; ++i) {
		std::copy(covs[i].begin(), covs[i].end(), &cov_flat[i * 4]);
	}
	auto cov_t = ad::make_tensor({b, 4}, std::move(cov_flat));
	auto pe = ad::embed_lookup(g, prof_table_, prof_ids);
	auto me = ad::embed_lookup(g, module_table_, module_ids);
	auto x = ad::concat_cols(g, {cov_t, pe, me});
	auto h1 = ad::relu(g, ad::add(g, ad::matmul(g, x, w1_), b1_));
	auto h2 = ad::sigmoid(g, ad::add(g, ad::matmul(g, h1, w2_), b2_));
	return ad::add(g, ad::matmul(g, h2, w3_), b3_); // identity output
}

EmbedNNModel EmbedNNModel::fit(const Panel& train, const Panel* validation,
                               const EmbedNNConfig& cfg) {
	if (cfg.epochs < 1) {
		throw ConfigError("embed_nn: epochs must be >= 1");
	}
	if (cfg.hidden.size() != 2 || cfg.hidden[0] < 1 || cfg.hidden[1] < 1 || cfg.batch_size < 1) {
		throw ConfigError("embed_nn: expected two hidden widths and a positive batch size");
	}

	EmbedNNModel m;
	m.cfg_ = cfg;
	m.vocab_ = CategoryVocab::from_panel(train);
	m.train_calendar_ = train.calendar();

	auto rng = make_engine(derive_seed(cfg.seed, "embed_nn"));
	const std::size_t dp = m.vocab_.profession_embed_dim();
	const std::size_t dm = m.vocab_.module_embed_dim();
	const std::size_t in = 4 + dp + dm;
	const std::size_t h1 = cfg.hidden[0], h2 = cfg.hidden[1];

	m.prof_table_ = ad::make_tensor({m.vocab_.professions().size(), dp}, true, "embed_nn.prof");
	m.module_table_ = ad::make_tensor({m.vocab_.modules().size(), dm}, true, "embed_nn.module");
	ad::fill_uniform(*m.prof_table_, 0.1, rng);
	ad::fill_uniform(*m.module_table_, 0.1, rng);
	m.w1_ = ad::make_tensor({in, h1}, true, "embed_nn.w1");
	m.b1_ = ad::make_tensor({h1}, true, "embed_nn.b1");
	m.w2_ = ad::make_tensor({h1, h2}, true, "embed_nn.w2");
	m.b2_ = ad::make_tensor({h2}, true, "embed_nn.b2");
	m.w3_ = ad::make_tensor({h2, 1}, true, "embed_nn.w3");
	m.b3_ = ad::make_tensor({1}, true, "embed_nn.b3");
	ad::fill_uniform(*m.w1_, std::sqrt(6.0 / static_cast<double>(in + h1)), rng);
	ad::fill_uniform(*m.w2_, std::sqrt(6.0 / static_cast<double>(h1 + h2)), rng);
	ad::fill_uniform(*m.w3_, std::sqrt(6.0 / static_cast<double>(h2 + 1)), rng);

	const auto covs = covariates_for(m.train_calendar_, 0, m.train_calendar_.length);
	for (const auto& [key, counts] : train.series()) {
		const double mx = static_cast<double>(*std::max_element(counts.begin(), counts.end()));
		m.scales_[key] = mx > 0.0 ? mx : 1.0;
	}

	std::vector<Sample> samples;
	samples.reserve(train.num_series() * train.calendar().length);
	for (const auto& [key, counts] : train.series()) {
		const std::size_t pid = m.vocab_.profession_id(key.profession);
		const std::size_t mid = m.vocab_.module_id(key.module);
		const double scale = m.scales_.at(key);
		for (std::int64_t t = 0; t < train.calendar().length; ++t) {
			samples.push_back(Sample{pid, mid, covs.normalized[t],
			                         static_cast<double>(counts[t]) / scale, &key});
		}
	}

	ad::AdamState adam(cfg.learning_rate);
	const auto params = m.parameters();
	std::vector<std::size_t> order(samples.size());
	for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

	for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
		std::shuffle(order.begin(), order.end(), rng);
		double epoch_sum = 0.0;
		std::size_t batches = 0;
		for (std::size_t off = 0; off < order.size(); off += cfg.batch_size) {
			const std::size_t b = std::min(cfg.batch_size, order.size() - off);
			std::vector<std::size_t> prof_ids(b), module_ids(b);
			std::vector<std::array<double, 4>> cov_rows(b);
			std::vector<double> targets(b);
			for (std::size_t i = 0; i < b; ++i) {
				const Sample& s = samples[order[off + i]];
				prof_ids[i] = s.prof_id;
				module_ids[i] = s.module_id;
				cov_rows[i] = s.cov;
				targets[i] = s.target;
			}
			ad::Graph g;
			auto pred = m.forward(g, prof_ids, module_ids, cov_rows);
			auto target_t = ad::make_tensor({b, 1}, std::move(targets));
			auto loss = ad::reduce_mean(g, ad::abs_op(g, ad::sub(g, pred, target_t)));
			if (!std::isfinite(loss->value[0])) {
				throw NumericsError("embed_nn: non-finite loss at epoch " + std::to_string(epoch) +
				                    ", batch " + std::to_string(batches));
			}
			ad::zero_all_grads(params);
			g.backward(loss);
			adam.step(params);
			epoch_sum += loss->value[0];
			++batches;
		}
		m.epoch_loss_.push_back(epoch_sum / static_cast<double>(std::max<std::size_t>(1, batches)));
	}

	// residual quartiles on the held-out tail drive the 50% interval
	if (validation != nullptr && validation->num_series() > 0) {
		const std::int64_t val_from = m.train_calendar_.index_of(validation->calendar().start);
		for (const auto& [key, counts] : validation->series()) {
			if (m.scales_.find(key) == m.scales_.end()) {
				continue;
			}
			const auto fc = m.predict(key, val_from, validation->calendar().length);
			std::vector<double> resid(counts.size());
			for (std::size_t t = 0; t < counts.size(); ++t) {
				resid[t] = static_cast<double>(counts[t]) - fc.point()[t];
			}
			m.val_residuals_[key] = std::move(resid);
		}
	}
	return m;
}

ForecastDistribution EmbedNNModel::predict(const SeriesKey& key, std::int64_t start_day_index,
                                           std::int64_t horizon) const {
	const auto it = scales_.find(key);
	if (it == scales_.end()) {
		throw CategoryError("embed_nn: key not seen in training: " + key.to_string());
	}
	if (horizon < 1 || start_day_index < 0) {
		throw ContractError("embed_nn: invalid forecast window");
	}
	const std::size_t pid = vocab_.profession_id(key.profession);
	const std::size_t mid = vocab_.module_id(key.module);
	const auto covs = covariates_for(train_calendar_, start_day_index, start_day_index + horizon);

	const std::size_t h = static_cast<std::size_t>(horizon);
	std::vector<std::size_t> prof_ids(h, pid), module_ids(h, mid);
	std::vector<std::array<double, 4>> cov_rows(covs.normalized);

	ad::Graph g;
	auto out = const_cast<EmbedNNModel*>(this)->forward(g, prof_ids, module_ids, cov_rows);
	std::vector<double> point(h);
	for (std::size_t i = 0; i < h; ++i) {
		point[i] = out->value[i] * it->second;
	}
	std::vector<double> resid;
	if (const auto rit = val_residuals_.find(key); rit != val_residuals_.end()) {
		resid = rit->second;
	}
	std::vector<double> offsets;
	if (!resid.empty()) {
		offsets = resid;
	}
	return ForecastDistribution::residual_offsets(std::move(point), std::move(offsets), true);
}

double EmbedNNModel::scale_for(const SeriesKey& key) const {
	const auto it = scales_.find(key);
	if (it == scales_.end()) {
		throw CategoryError("embed_nn: key not seen in training: " + key.to_string());
	}
	return it->second;
}

std::vector<ad::Tensor> EmbedNNModel::parameters() const {
	return {prof_table_, module_table_, w1_, b1_, w2_, b2_, w3_, b3_};
}

void EmbedNNModel::save(const std::string& path_prefix) const {
	save_checkpoint(path_prefix + ".bin", "embed_nn", parameters());
	nlohmann::ordered_json manifest;
	manifest["model"] = "embed_nn";
	manifest["config"] = {{"hidden", cfg_.hidden},
	                      {"epochs", cfg_.epochs},
	                      {"batch_size", cfg_.batch_size},
	                      {"learning_rate", cfg_.learning_rate},
	                      {"seed", cfg_.seed}};
	manifest["professions"] = vocab_.professions();
	manifest["modules"] = vocab_.modules();
	manifest["calendar"] = {{"start", train_calendar_.start.to_iso()},
	                        {"length", train_calendar_.length}};
	nlohmann::ordered_json scales = nlohmann::ordered_json::array();
	for (const auto& [key, scale] : scales_) {
		nlohmann::ordered_json entry{{"profession", key.profession},
		                             {"module", key.module},
		                             {"region", key.region},
		                             {"scale", scale}};
		if (const auto rit = val_residuals_.find(key); rit != val_residuals_.end()) {
			entry["validation_residuals"] = rit->second;
		}
		scales.push_back(std::move(entry));
	}
	manifest["series"] = std::move(scales);
	std::ofstream out(path_prefix + ".json");
	if (!out) {
		throw FormatError("cannot write manifest " + path_prefix + ".json");
	}
	out << manifest.dump(2) << "\n";
}

EmbedNNModel EmbedNNModel::load(const std::string& path_prefix) {
	std::ifstream in(path_prefix + ".json");
	if (!in) {
		throw FormatError("cannot read manifest " + path_prefix + ".json");
	}
	const auto manifest = nlohmann::json::parse(in);
	EmbedNNModel m;
	m.cfg_.hidden = manifest.at("config").at("hidden").get<std::vector<std::size_t>>();
	m.cfg_.epochs = manifest.at("config").at("epochs").get<std::size_t>();
	m.cfg_.batch_size = manifest.at("config").at("batch_size").get<std::size_t>();
	m.cfg_.learning_rate = manifest.at("config").at("learning_rate").get<double>();
	m.cfg_.seed = manifest.at("config").at("seed").get<std::uint64_t>();
	m.vocab_ = CategoryVocab::from_lists(manifest.at("professions").get<std::vector<std::string>>(),
	                                     manifest.at("modules").get<std::vector<std::string>>());
	m.train_calendar_ = Calendar{Date::parse(manifest.at("calendar").at("start").get<std::string>()),
	                             manifest.at("calendar").at("length").get<std::int64_t>()};
	for (const auto& entry : manifest.at("series")) {
		const SeriesKey key{entry.at("profession").get<std::string>(),
		                    entry.at("module").get<std::string>(),
		                    entry.at("region").get<std::string>()};
		m.scales_[key] = entry.at("scale").get<double>();
		if (entry.contains("validation_residuals")) {
			m.val_residuals_[key] = entry.at("validation_residuals").get<std::vector<double>>();
		}
	}
	auto loaded = load_checkpoint(path_prefix + ".bin");
	if (loaded.model_name != "embed_nn") {
		throw FormatError("checkpoint model mismatch: expected embed_nn, got " + loaded.model_name);
	}
	auto take = [&loaded](const std::string& name) {
		const auto it = loaded.tensors.find(name);
		if (it == loaded.tensors.end()) {
			throw FormatError("checkpoint missing tensor " + name);
		}
		it->second->requires_grad = true;
		return it->second;
	};
	m.prof_table_ = take("embed_nn.prof");
	m.module_table_ = take("embed_nn.module");
	m.w1_ = take("embed_nn.w1");
	m.b1_ = take("embed_nn.b1");
	m.w2_ = take("embed_nn.w2");
	m.b2_ = take("embed_nn.b2");
	m.w3_ = take("embed_nn.w3");
	m.b3_ = take("embed_nn.b3");
	return m;
}

} // namespace demandcast
