#include "demandcast/backtest.hpp"

#include "demandcast/csv.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/parallel.hpp"
#include "demandcast/rng.hpp"
#include "demandcast/sarima.hpp"
#include "demandcast/seasonal_naive.hpp"
#include "demandcast/split.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace demandcast {

std::vector<std::string> all_model_names() {
	return {kModelSeasonalNaive, kModelSarima, kModelEmbedNN, kModelDeepAR, kModelGPCopula};
}

std::vector<Date> BacktestPlan::default_origins() {
	std::vector<Date> out;
	for (unsigned month = 6; month <= 12; ++month) {
		out.emplace_back(2020, month, 1);
	}
	return out;
}

namespace {

void validate_plan(const Panel& panel, const BacktestPlan& plan) {
	if (plan.origins.empty()) {
		throw ConfigError("backtest plan needs at least one origin");
	}
	if (plan.horizon < 1 || plan.season < 1 || plan.validation_tail < 0) {
		throw ConfigError("backtest plan has out-of-range horizon/season/validation_tail");
	}
	const auto names = all_model_names();
	const std::set<std::string> known(names.begin(), names.end());
	for (const auto& m : plan.models) {
		if (known.find(m) == known.end()) {
			throw ConfigError("unknown model '" + m + "'");
		}
	}
	if (plan.models.empty()) {
		throw ConfigError("backtest plan needs at least one model");
	}
	for (std::size_t i = 1; i < plan.origins.size(); ++i) {
		if (!(plan.origins[i - 1] < plan.origins[i])) {
			throw ConfigError("backtest origins must be strictly increasing");
		}
	}
	for (const auto& origin : plan.origins) {
		const auto idx = panel.calendar().index_of(origin);
		if (idx < 60) {
			throw ConfigError("origin " + origin.to_iso() + " has less than 60 days of history");
		}
		if (idx + plan.horizon > panel.calendar().length) {
			throw ConfigError("origin " + origin.to_iso() + " has no full test window in the panel");
		}
	}
}

std::string config_signature(const BacktestPlan& plan, const ModelConfigs& c) {
	std::ostringstream ss;
	ss << "plan:";
	for (const auto& o : plan.origins) ss << o.to_iso() << ";";
	ss << "h=" << plan.horizon << ";s=" << plan.season << ";vt=" << plan.validation_tail
	   << ";ex=" << plan.exhaustive_arima << ";models=";
	for (const auto& m : plan.models) ss << m << ",";
	ss << "|embed:" << c.embed_nn.hidden[0] << "," << c.embed_nn.hidden[1] << ","
	   << c.embed_nn.epochs << "," << c.embed_nn.batch_size << "," << c.embed_nn.learning_rate
	   << "," << c.embed_nn.seed;
	ss << "|deepar:" << c.deepar.hidden_size << "," << c.deepar.layers << "," << c.deepar.dropout
	   << "," << c.deepar.epochs << "," << c.deepar.batch_size << "," << c.deepar.context_length
	   << "," << c.deepar.horizon << "," << c.deepar.sample_paths << "," << c.deepar.learning_rate
	   << "," << c.deepar.seed;
	ss << "|gpc:" << c.gp_copula.hidden_size << "," << c.gp_copula.layers << ","
	   << c.gp_copula.dropout << "," << c.gp_copula.epochs << "," << c.gp_copula.rank << ","
	   << c.gp_copula.series_batch << "," << c.gp_copula.context_length << ","
	   << c.gp_copula.sample_paths << "," << c.gp_copula.learning_rate << "," << c.gp_copula.seed;
	return ss.str();
}

struct ScoredForecast {
	std::optional<ForecastDistribution> forecast;
	bool fallback = false;
	std::string error;
};

} // namespace

BacktestReport run_backtest(const Panel& panel, const BacktestPlan& plan,
                            const ModelConfigs& configs, std::uint64_t seed, std::size_t jobs,
                            const ForecastSink& sink) {
	validate_plan(panel, plan);

	BacktestReport report;
	report.seed = seed;
	report.panel_hash = panel_hash(panel);
	report.config_hash = fnv1a(config_signature(plan, configs));

	const auto keys = panel.keys();
	std::set<std::string> aborted;
	std::map<std::string, std::size_t> failure_count;
	const std::size_t per_model_total = plan.origins.size() * keys.size();

	for (const auto& origin : plan.origins) {
		const SplitSpec spec{origin, plan.horizon, plan.validation_tail};
		const PanelSplit parts = split(panel, spec);
		const Panel history = history_before(panel, origin);

		// instrumented leakage assertion: nothing fitted may see the origin
		if (!(parts.train.calendar().end() < origin) ||
		    (parts.has_validation && !(parts.validation.calendar().end() < origin)) ||
		    !(history.calendar().end() < origin) || parts.test.calendar().start != origin) {
			throw LeakageError("split boundaries leak across origin " + origin.to_iso());
		}

		const std::int64_t origin_idx = panel.calendar().index_of(origin);
		std::vector<Date> test_dates(plan.horizon);
		for (std::int64_t h = 0; h < plan.horizon; ++h) {
			test_dates[h] = origin.plus_days(h);
		}

		// per-model forecasts for every series at this origin
		std::map<std::string, std::vector<ScoredForecast>> forecasts;

		for (const auto& model : plan.models) {
			if (aborted.count(model)) {
				continue;
			}
			auto& slot = forecasts[model];
			slot.resize(keys.size());

			try {
				if (model == kModelSeasonalNaive) {
					parallel_for(keys.size(), jobs, [&](std::size_t i) {
						try {
							slot[i].forecast = seasonal_naive(history.values(keys[i]), plan.season,
							                                  plan.horizon);
						} catch (const std::exception& e) {
							slot[i].error = e.what();
						}
					});
				} else if (model == kModelSarima) {
					AutoSarimaOptions opts;
					opts.exhaustive = plan.exhaustive_arima;
					std::vector<std::string> fit_jsons(keys.size());
					parallel_for(keys.size(), jobs, [&](std::size_t i) {
						const auto series = history.values(keys[i]);
						try {
							const SarimaFit fit =
							    auto_sarima(series, static_cast<int>(plan.season), opts);
							slot[i].forecast = sarima_forecast(fit, series, plan.horizon);
							fit_jsons[i] = sarima_fit_to_json(fit);
						} catch (const std::exception&) {
							// flagged fallback keeps the report rectangular
							try {
								slot[i].forecast = seasonal_naive(series, plan.season, plan.horizon);
								slot[i].fallback = true;
							} catch (const std::exception& e2) {
								slot[i].error = e2.what();
							}
						}
					});
					for (std::size_t i = 0; i < keys.size(); ++i) {
						if (!fit_jsons[i].empty()) {
							report.sarima_fits[{origin.to_iso(), keys[i].slug()}] =
							    std::move(fit_jsons[i]);
						}
					}
				} else if (model == kModelEmbedNN) {
					EmbedNNConfig cfg = configs.embed_nn;
					cfg.seed = derive_seed(seed, "embed_nn.fit", origin.day_number());
					const EmbedNNModel m =
					    EmbedNNModel::fit(parts.train, parts.has_validation ? &parts.validation : nullptr, cfg);
					for (std::size_t i = 0; i < keys.size(); ++i) {
						try {
							slot[i].forecast = m.predict(keys[i], origin_idx, plan.horizon);
						} catch (const std::exception& e) {
							slot[i].error = e.what();
						}
					}
				} else if (model == kModelDeepAR) {
					DeepARConfig cfg = configs.deepar;
					cfg.horizon = plan.horizon;
					cfg.seed = derive_seed(seed, "deepar.fit", origin.day_number());
					const DeepARModel m = DeepARModel::fit(parts.train, cfg);
					parallel_for(keys.size(), jobs, [&](std::size_t i) {
						try {
							slot[i].forecast = m.forecast(
							    keys[i], history, plan.horizon, cfg.sample_paths,
							    derive_seed(seed, "deepar.fc." + keys[i].to_string(),
							                origin.day_number()));
						} catch (const std::exception& e) {
							slot[i].error = e.what();
						}
					});
				} else if (model == kModelGPCopula) {
					GPCopulaConfig cfg = configs.gp_copula;
					cfg.horizon = plan.horizon;
					cfg.rank = std::min<std::size_t>(cfg.rank, panel.num_series());
					cfg.seed = derive_seed(seed, "gp_copula.fit", origin.day_number());
					const GPCopulaModel m = GPCopulaModel::fit(parts.train, cfg);
					auto all = m.forecast_all(history, plan.horizon, cfg.sample_paths,
					                          derive_seed(seed, "gp_copula.fc", origin.day_number()));
					for (std::size_t i = 0; i < keys.size(); ++i) {
						const auto it = all.find(keys[i]);
						if (it != all.end()) {
							slot[i].forecast = it->second;
							slot[i].fallback = m.dropped_keys().count(keys[i]) > 0;
						} else {
							slot[i].error = "no forecast produced";
						}
					}
				}
			} catch (const std::exception& e) {
				// whole-model failure at this origin
				for (auto& s : slot) {
					if (!s.forecast && s.error.empty()) {
						s.error = e.what();
					}
				}
			}
		}

		// score and record, deterministic order: model then key
		for (const auto& model : plan.models) {
			if (aborted.count(model)) {
				continue;
			}
			const auto& slot = forecasts[model];
			for (std::size_t i = 0; i < keys.size(); ++i) {
				const auto& sf = slot[i];
				if (!sf.forecast) {
					report.failures.push_back(FailureRecord{keys[i], origin, model, sf.error});
					++failure_count[model];
					continue;
				}
				const auto actual = parts.test.values(keys[i]);
				const auto& fc = *sf.forecast;
				const auto q25 = fc.quantile(0.25);
				const auto q75 = fc.quantile(0.75);

				MetricRecord rec;
				rec.key = keys[i];
				rec.origin = origin;
				rec.model = model;
				rec.fallback = sf.fallback;
				const auto hist_values = history.values(keys[i]);
				rec.mase = mase(actual, fc.point(), hist_values, plan.season);
				rec.mape = mape(actual, fc.point());
				rec.smape = smape(actual, fc.point());
				const RmseMse rm = rmse_mse(actual, fc.point());
				rec.rmse = rm.rmse;
				rec.mse = rm.mse;
				rec.coverage_50 = coverage(actual, q25, q75);
				report.records.push_back(std::move(rec));

				if (sink) {
					sink(origin, model, keys[i], test_dates, actual, fc);
				}
			}
			if (failure_count[model] * 2 > per_model_total) {
				aborted.insert(model);
			}
		}
	}

	report.aborted_models.assign(aborted.begin(), aborted.end());
	if (!report.records.empty()) {
		report.aggregates = aggregate(report.records);
	}
	return report;
}

std::string format_summary(const AggregateReport& aggregates) {
	std::ostringstream out;
	auto cell = [](std::optional<double> v) {
		char buf[32];
		if (v) {
			std::snprintf(buf, sizeof(buf), "%10.4f", *v);
		} else {
			std::snprintf(buf, sizeof(buf), "%10s", "-");
		}
		return std::string(buf);
	};
	out << "Model                 MASE       MAPE      sMAPE       RMSE        MSE   coverage50\n";
	for (const auto& s : aggregates.per_model) {
		char name[32];
		std::snprintf(name, sizeof(name), "%-18s", s.model.c_str());
		out << name << cell(s.mase) << " " << cell(s.mape) << " " << cell(s.smape) << " "
		    << cell(s.rmse) << " " << cell(s.mse) << "   " << cell(s.coverage_50) << "\n";
	}
	return out.str();
}

namespace {

std::string format_double(double v) {
	std::ostringstream ss;
	ss.precision(17);
	ss << v;
	return ss.str();
}

nlohmann::ordered_json summary_json(const MetricSummary& s) {
	nlohmann::ordered_json j;
	j["model"] = s.model;
	if (s.mase) j["mase"] = *s.mase; else j["mase"] = nullptr;
	if (s.mape) j["mape"] = *s.mape; else j["mape"] = nullptr;
	j["smape"] = s.smape;
	j["rmse"] = s.rmse;
	j["mse"] = s.mse;
	j["coverage_50"] = s.coverage_50;
	j["count"] = s.count;
	return j;
}

} // namespace

std::string report_to_json(const BacktestReport& report) {
	nlohmann::ordered_json j;
	j["provenance"] = {{"seed", report.seed},
	                   {"panel_hash", report.panel_hash},
	                   {"config_hash", report.config_hash}};
	j["aggregates"] = nlohmann::ordered_json::array();
	for (const auto& s : report.aggregates.per_model) {
		j["aggregates"].push_back(summary_json(s));
	}
	j["monthly_mase"] = nlohmann::ordered_json::array();
	for (const auto& [slot, box] : report.aggregates.monthly_mase) {
		j["monthly_mase"].push_back({{"model", slot.first},
		                             {"month", slot.second},
		                             {"min", box.min},
		                             {"q25", box.q25},
		                             {"median", box.median},
		                             {"q75", box.q75},
		                             {"max", box.max},
		                             {"count", box.count}});
	}
	j["records"] = nlohmann::ordered_json::array();
	for (const auto& r : report.records) {
		nlohmann::ordered_json rec;
		rec["origin"] = r.origin.to_iso();
		rec["profession"] = r.key.profession;
		rec["module"] = r.key.module;
		rec["region"] = r.key.region;
		rec["model"] = r.model;
		if (r.mase) rec["mase"] = *r.mase; else rec["mase"] = nullptr;
		if (r.mape) rec["mape"] = *r.mape; else rec["mape"] = nullptr;
		rec["smape"] = r.smape;
		rec["rmse"] = r.rmse;
		rec["mse"] = r.mse;
		rec["coverage_50"] = r.coverage_50;
		rec["fallback"] = r.fallback;
		j["records"].push_back(std::move(rec));
	}
	j["failures"] = nlohmann::ordered_json::array();
	for (const auto& f : report.failures) {
		j["failures"].push_back({{"origin", f.origin.to_iso()},
		                         {"profession", f.key.profession},
		                         {"module", f.key.module},
		                         {"region", f.key.region},
		                         {"model", f.model},
		                         {"reason", f.reason}});
	}
	j["aborted_models"] = report.aborted_models;
	return j.dump(2) + "\n";
}

std::string records_to_csv(const std::vector<MetricRecord>& records) {
	std::ostringstream out;
	out << "origin,profession,module,region,model,mase,mape,smape,rmse,mse,coverage_50,fallback\n";
	for (const auto& r : records) {
		out << r.origin.to_iso() << ',' << r.key.profession << ',' << r.key.module << ','
		    << r.key.region << ',' << r.model << ',';
		if (r.mase) out << format_double(*r.mase);
		out << ',';
		if (r.mape) out << format_double(*r.mape);
		out << ',' << format_double(r.smape) << ',' << format_double(r.rmse) << ','
		    << format_double(r.mse) << ',' << format_double(r.coverage_50) << ','
		    << (r.fallback ? 1 : 0) << '\n';
	}
	return out.str();
}

std::vector<MetricRecord> records_from_csv(const std::string& csv_text) {
	std::istringstream in(csv_text);
	std::string line;
	if (!std::getline(in, line)) {
		throw FormatError("records CSV is empty");
	}
	const std::string expected =
	    "origin,profession,module,region,model,mase,mape,smape,rmse,mse,coverage_50,fallback";
	if (line != expected && line != expected + "\r") {
		throw FormatError("records CSV header mismatch");
	}
	std::vector<MetricRecord> out;
	while (std::getline(in, line)) {
		if (line.empty() || line == "\r") continue;
		const auto f = split_csv_line(line);
		if (f.size() != 12) {
			throw FormatError("records CSV row has " + std::to_string(f.size()) + " fields");
		}
		MetricRecord r;
		r.origin = Date::parse(f[0]);
		r.key = SeriesKey{f[1], f[2], f[3]};
		r.model = f[4];
		if (!f[5].empty()) r.mase = std::stod(f[5]);
		if (!f[6].empty()) r.mape = std::stod(f[6]);
		r.smape = std::stod(f[7]);
		r.rmse = std::stod(f[8]);
		r.mse = std::stod(f[9]);
		r.coverage_50 = std::stod(f[10]);
		r.fallback = f[11] == "1";
		out.push_back(std::move(r));
	}
	return out;
}

} // namespace demandcast
