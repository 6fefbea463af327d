#include "demandcast/config.hpp"

#include "demandcast/csv.hpp"
#include "demandcast/errors.hpp"

#include <nlohmann/json.hpp>

#include <set>

namespace demandcast {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& section,
                    const std::set<std::string>& allowed) {
	if (!obj.is_object()) {
		throw ConfigError("config section '" + section + "' must be an object");
	}
	for (const auto& [key, _] : obj.items()) {
		if (allowed.find(key) == allowed.end()) {
			throw ConfigError("unknown config key '" + section + "." + key + "'");
		}
	}
}

template <typename T>
void read_if(const json& obj, const char* key, T& target) {
	if (obj.contains(key)) {
		target = obj.at(key).get<T>();
	}
}

void read_date_if(const json& obj, const char* key, std::optional<Date>& target) {
	if (obj.contains(key) && !obj.at(key).is_null()) {
		const auto s = obj.at(key).get<std::string>();
		if (!s.empty()) {
			target = Date::parse(s);
		}
	}
}

void parse_synth(const json& obj, SynthSpec& s) {
	reject_unknown(obj, "synth",
	               {"n_professions", "n_modules", "days", "start", "base_level", "trend_per_day",
	                "weekly_amplitude", "shock_day", "shock_multiplier", "dispersion", "seed"});
	read_if(obj, "n_professions", s.n_professions);
	read_if(obj, "n_modules", s.n_modules);
	read_if(obj, "days", s.days);
	if (obj.contains("start")) {
		s.start = Date::parse(obj.at("start").get<std::string>());
	}
	read_if(obj, "base_level", s.base_level);
	read_if(obj, "trend_per_day", s.trend_per_day);
	read_if(obj, "weekly_amplitude", s.weekly_amplitude);
	if (obj.contains("shock_day")) {
		if (obj.at("shock_day").is_null()) {
			s.shock_day.reset();
		} else {
			s.shock_day = obj.at("shock_day").get<std::int64_t>();
		}
	}
	read_if(obj, "shock_multiplier", s.shock_multiplier);
	read_if(obj, "dispersion", s.dispersion);
	read_if(obj, "seed", s.seed);
}

void parse_backtest(const json& obj, BacktestPlan& p) {
	reject_unknown(obj, "backtest",
	               {"origins", "horizon", "season", "validation_tail", "models",
	                "exhaustive_arima"});
	if (obj.contains("origins")) {
		p.origins.clear();
		for (const auto& o : obj.at("origins")) {
			p.origins.push_back(Date::parse(o.get<std::string>()));
		}
	}
	read_if(obj, "horizon", p.horizon);
	read_if(obj, "season", p.season);
	read_if(obj, "validation_tail", p.validation_tail);
	read_if(obj, "models", p.models);
	read_if(obj, "exhaustive_arima", p.exhaustive_arima);
}

void parse_embed(const json& obj, EmbedNNConfig& c) {
	reject_unknown(obj, "embed_nn", {"hidden", "epochs", "batch_size", "learning_rate"});
	read_if(obj, "hidden", c.hidden);
	read_if(obj, "epochs", c.epochs);
	read_if(obj, "batch_size", c.batch_size);
	read_if(obj, "learning_rate", c.learning_rate);
}

void parse_deepar(const json& obj, DeepARConfig& c) {
	reject_unknown(obj, "deepar",
	               {"hidden_size", "layers", "dropout", "epochs", "batch_size", "context_length",
	                "sample_paths", "learning_rate"});
	read_if(obj, "hidden_size", c.hidden_size);
	read_if(obj, "layers", c.layers);
	read_if(obj, "dropout", c.dropout);
	read_if(obj, "epochs", c.epochs);
	read_if(obj, "batch_size", c.batch_size);
	read_if(obj, "context_length", c.context_length);
	read_if(obj, "sample_paths", c.sample_paths);
	read_if(obj, "learning_rate", c.learning_rate);
}

void parse_gp_copula(const json& obj, GPCopulaConfig& c) {
	reject_unknown(obj, "gp_copula",
	               {"hidden_size", "layers", "dropout", "epochs", "rank", "series_batch",
	                "context_length", "sample_paths", "learning_rate"});
	read_if(obj, "hidden_size", c.hidden_size);
	read_if(obj, "layers", c.layers);
	read_if(obj, "dropout", c.dropout);
	read_if(obj, "epochs", c.epochs);
	read_if(obj, "rank", c.rank);
	read_if(obj, "series_batch", c.series_batch);
	read_if(obj, "context_length", c.context_length);
	read_if(obj, "sample_paths", c.sample_paths);
	read_if(obj, "learning_rate", c.learning_rate);
}

} // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
	json root;
	try {
		root = json::parse(text);
	} catch (const json::parse_error& e) {
		throw ConfigError(std::string("config is not valid JSON: ") + e.what());
	}
	reject_unknown(root, "<root>",
	               {"seed", "out", "jobs", "synth", "ingest", "backtest", "embed_nn", "deepar",
	                "gp_copula", "forecast"});
	RunConfig cfg;
	read_if(root, "seed", cfg.seed);
	read_if(root, "out", cfg.out_dir);
	read_if(root, "jobs", cfg.jobs);
	if (root.contains("synth")) parse_synth(root.at("synth"), cfg.synth);
	if (root.contains("ingest")) {
		const auto& obj = root.at("ingest");
		reject_unknown(obj, "ingest",
		               {"utc_offset_minutes", "calendar_start", "calendar_end",
		                "trim_leading_zeros"});
		read_if(obj, "utc_offset_minutes", cfg.ingest.utc_offset_minutes);
		read_date_if(obj, "calendar_start", cfg.ingest.calendar_start);
		read_date_if(obj, "calendar_end", cfg.ingest.calendar_end);
		read_if(obj, "trim_leading_zeros", cfg.ingest.trim_leading_zeros);
	}
	if (root.contains("backtest")) parse_backtest(root.at("backtest"), cfg.plan);
	if (root.contains("embed_nn")) parse_embed(root.at("embed_nn"), cfg.models.embed_nn);
	if (root.contains("deepar")) parse_deepar(root.at("deepar"), cfg.models.deepar);
	if (root.contains("gp_copula")) parse_gp_copula(root.at("gp_copula"), cfg.models.gp_copula);
	if (root.contains("forecast")) {
		const auto& obj = root.at("forecast");
		reject_unknown(obj, "forecast", {"origin"});
		read_date_if(obj, "origin", cfg.forecast.origin);
	}
	return cfg;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
	return from_json_text(read_text_file(path));
}

std::string RunConfig::to_json_text() const {
	nlohmann::ordered_json root;
	root["seed"] = seed;
	root["out"] = out_dir;
	root["jobs"] = jobs;
	root["synth"] = {{"n_professions", synth.n_professions},
	                 {"n_modules", synth.n_modules},
	                 {"days", synth.days},
	                 {"start", synth.start.to_iso()},
	                 {"base_level", synth.base_level},
	                 {"trend_per_day", synth.trend_per_day},
	                 {"weekly_amplitude", synth.weekly_amplitude},
	                 {"shock_day", synth.shock_day ? nlohmann::ordered_json(*synth.shock_day)
	                                               : nlohmann::ordered_json(nullptr)},
	                 {"shock_multiplier", synth.shock_multiplier},
	                 {"dispersion", synth.dispersion},
	                 {"seed", synth.seed}};
	root["ingest"] = {{"utc_offset_minutes", ingest.utc_offset_minutes},
	                  {"calendar_start",
	                   ingest.calendar_start ? nlohmann::ordered_json(ingest.calendar_start->to_iso())
	                                         : nlohmann::ordered_json(nullptr)},
	                  {"calendar_end", ingest.calendar_end
	                                       ? nlohmann::ordered_json(ingest.calendar_end->to_iso())
	                                       : nlohmann::ordered_json(nullptr)},
	                  {"trim_leading_zeros", ingest.trim_leading_zeros}};
	nlohmann::ordered_json origins = nlohmann::ordered_json::array();
	for (const auto& o : plan.origins) {
		origins.push_back(o.to_iso());
	}
	root["backtest"] = {{"origins", origins},
	                    {"horizon", plan.horizon},
	                    {"season", plan.season},
	                    {"validation_tail", plan.validation_tail},
	                    {"models", plan.models},
	                    {"exhaustive_arima", plan.exhaustive_arima}};
	root["embed_nn"] = {{"hidden", models.embed_nn.hidden},
	                    {"epochs", models.embed_nn.epochs},
	                    {"batch_size", models.embed_nn.batch_size},
	                    {"learning_rate", models.embed_nn.learning_rate}};
	root["deepar"] = {{"hidden_size", models.deepar.hidden_size},
	                  {"layers", models.deepar.layers},
	                  {"dropout", models.deepar.dropout},
	                  {"epochs", models.deepar.epochs},
	                  {"batch_size", models.deepar.batch_size},
	                  {"context_length", models.deepar.context_length},
	                  {"sample_paths", models.deepar.sample_paths},
	                  {"learning_rate", models.deepar.learning_rate}};
	root["gp_copula"] = {{"hidden_size", models.gp_copula.hidden_size},
	                     {"layers", models.gp_copula.layers},
	                     {"dropout", models.gp_copula.dropout},
	                     {"epochs", models.gp_copula.epochs},
	                     {"rank", models.gp_copula.rank},
	                     {"series_batch", models.gp_copula.series_batch},
	                     {"context_length", models.gp_copula.context_length},
	                     {"sample_paths", models.gp_copula.sample_paths},
	                     {"learning_rate", models.gp_copula.learning_rate}};
	root["forecast"] = {{"origin", forecast.origin ? nlohmann::ordered_json(forecast.origin->to_iso())
	                                               : nlohmann::ordered_json(nullptr)}};
	return root.dump(2) + "\n";
}

} // namespace demandcast
