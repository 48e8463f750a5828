#include "wfcast/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "wfcast/parallel.hpp"
#include "wfcast/util.hpp"
#include "wfcast/version.hpp"

namespace wfcast {

namespace {

using nlohmann::json;

const char* scale_name(ParamScale s) {
    switch (s) {
        case ParamScale::kLinear: return "linear";
        case ParamScale::kLog: return "log";
        case ParamScale::kInteger: return "integer";
    }
    return "linear";
}

ParamScale scale_from(const std::string& s) {
    if (s == "linear") return ParamScale::kLinear;
    if (s == "log") return ParamScale::kLog;
    if (s == "integer") return ParamScale::kInteger;
    throw std::invalid_argument("config: unknown parameter scale " + s);
}

json space_to_json(const SearchSpace& space) {
    json arr = json::array();
    for (const auto& def : space.params)
        arr.push_back(json{{"name", def.name},
                           {"lower", def.lower},
                           {"upper", def.upper},
                           {"scale", scale_name(def.scale)}});
    return arr;
}

SearchSpace space_from_json(const json& arr) {
    SearchSpace space;
    for (const auto& j : arr)
        space.params.push_back(ParamDef{j.at("name").get<std::string>(),
                                        j.at("lower").get<double>(),
                                        j.at("upper").get<double>(),
                                        scale_from(j.at("scale").get<std::string>())});
    space.validate();
    return space;
}

json config_to_json_impl(const ExperimentConfig& c, bool mask_output) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    if (!c.csv_path.empty()) {
        j["data"] = json{{"path", c.csv_path},
                         {"date_column", c.csv.date_column},
                         {"close_column", c.csv.close_column},
                         {"date_format", c.csv.date_format},
                         {"delimiter", std::string(1, c.csv.delimiter)}};
    } else {
        json regimes = json::array();
        for (const auto& seg : c.synthetic.regimes)
            regimes.push_back(json{{"length", seg.length}, {"multiplier", seg.multiplier}});
        j["data"] = json{{"synthetic", json{{"n", c.synthetic.n},
                                            {"ar_coeff", c.synthetic.ar_coeff},
                                            {"sigma", c.synthetic.sigma},
                                            {"regimes", std::move(regimes)},
                                            {"seed", c.synthetic.seed},
                                            {"initial_price", c.synthetic.initial_price}}}};
    }
    j["families"] = c.families;
    j["lags"] = c.lags;
    j["schemes"] = c.schemes;
    j["test_fraction"] = c.test_fraction;
    j["rolling_length"] = c.rolling_length;
    j["tuning"] = json{{"trials", c.tuning.trials},
                       {"cv_folds", c.tuning.cv_folds},
                       {"use_tpe", c.tuning.use_tpe},
                       {"warmup_trials", c.tuning.warmup_trials},
                       {"good_quantile", c.tuning.good_quantile},
                       {"tpe_candidates", c.tuning.tpe_candidates}};
    j["gbt"] = json{{"split_mode", c.gbt_split_mode == SplitMode::kExact ? "exact" : "histogram"},
                    {"max_bins", c.gbt_max_bins}};
    j["arma"] = json{{"max_p", c.arma_max_p},
                     {"max_q", c.arma_max_q},
                     {"reselect_each_step", c.arma_reselect_each_step}};
    j["spaces"] = json{{"gbt", space_to_json(c.gbt_space)}, {"ridge", space_to_json(c.ridge_space)}};
    j["output"] = json{{"dir", mask_output ? std::string() : c.output_dir},
                       {"plot_last_days", c.plot_last_days},
                       {"importance_top", c.importance_top}};
    return j;
}

std::string fixed(double v, int decimals) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string opt_fixed(const std::optional<double>& v, int decimals) {
    return v ? fixed(*v, decimals) : std::string("n/a");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_report: cannot open " + path);
    out << text;
    if (!out) throw std::runtime_error("emit_report: write failed for " + path);
}

int family_rank(const std::string& family) {
    if (family == "gbt") return 0;
    if (family == "ridge") return 1;
    return 2;
}

int scheme_rank(const std::string& scheme) { return scheme == "expanding" ? 0 : 1; }

std::string display_family(const std::string& family) {
    if (family == "gbt") return "GBT";
    if (family == "ridge") return "Ridge";
    return "ARMA";
}

json metrics_to_json(const Metrics& m) {
    json j;
    j["rmse"] = m.rmse;
    j["mae"] = m.mae;
    if (m.r2)
        j["r2"] = *m.r2;
    else
        j["r2"] = nullptr;
    return j;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (families.empty()) throw std::invalid_argument("config: no model families selected");
    bool needs_lags = false;
    for (const auto& f : families) {
        if (f != "gbt" && f != "ridge" && f != "arma")
            throw std::invalid_argument("config: unknown family " + f);
        if (f != "arma") needs_lags = true;
    }
    if (needs_lags && lags.empty())
        throw std::invalid_argument("config: gbt/ridge families need at least one lag count");
    for (int L : lags)
        if (L < 1) throw std::invalid_argument("config: lag counts must be >= 1");
    if (schemes.empty()) throw std::invalid_argument("config: no window schemes selected");
    for (const auto& s : schemes)
        if (s != "expanding" && s != "rolling")
            throw std::invalid_argument("config: unknown scheme " + s);
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
        throw std::invalid_argument("config: test_fraction must be in (0,1)");
    if (rolling_length < 50)
        throw std::invalid_argument("config: rolling_length must be >= 50");
    if (tuning.trials < 1) throw std::invalid_argument("config: tuning trials must be >= 1");
    if (plot_last_days < 0) throw std::invalid_argument("config: plot_last_days must be >= 0");
    if (importance_top < 0) throw std::invalid_argument("config: importance_top must be >= 0");
    gbt_space.validate();
    ridge_space.validate();
    if (csv_path.empty()) synthetic.validate();
}

std::string config_to_json(const ExperimentConfig& config) {
    return config_to_json_impl(config, false).dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig c;
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (j.contains("data")) {
        const auto& jd = j.at("data");
        if (jd.contains("path")) {
            c.csv_path = jd.at("path").get<std::string>();
            c.csv.date_column = jd.value("date_column", c.csv.date_column);
            c.csv.close_column = jd.value("close_column", c.csv.close_column);
            c.csv.date_format = jd.value("date_format", c.csv.date_format);
            const auto delim = jd.value("delimiter", std::string(","));
            if (delim.size() != 1)
                throw std::invalid_argument("config: delimiter must be a single character");
            c.csv.delimiter = delim[0];
        } else if (jd.contains("synthetic")) {
            const auto& js = jd.at("synthetic");
            c.synthetic.n = js.value("n", c.synthetic.n);
            c.synthetic.ar_coeff = js.value("ar_coeff", c.synthetic.ar_coeff);
            c.synthetic.sigma = js.value("sigma", c.synthetic.sigma);
            c.synthetic.seed = js.value("seed", c.synthetic.seed);
            c.synthetic.initial_price = js.value("initial_price", c.synthetic.initial_price);
            if (js.contains("regimes"))
                for (const auto& jr : js.at("regimes"))
                    c.synthetic.regimes.push_back(RegimeSegment{
                        jr.at("length").get<std::size_t>(), jr.at("multiplier").get<double>()});
        } else {
            throw std::invalid_argument("config: data needs either path or synthetic");
        }
    }
    if (j.contains("families")) c.families = j.at("families").get<std::vector<std::string>>();
    if (j.contains("lags")) c.lags = j.at("lags").get<std::vector<int>>();
    if (j.contains("schemes")) c.schemes = j.at("schemes").get<std::vector<std::string>>();
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.rolling_length = j.value("rolling_length", c.rolling_length);
    if (j.contains("tuning")) {
        const auto& jt = j.at("tuning");
        c.tuning.trials = jt.value("trials", c.tuning.trials);
        c.tuning.cv_folds = jt.value("cv_folds", c.tuning.cv_folds);
        c.tuning.use_tpe = jt.value("use_tpe", c.tuning.use_tpe);
        c.tuning.warmup_trials = jt.value("warmup_trials", c.tuning.warmup_trials);
        c.tuning.good_quantile = jt.value("good_quantile", c.tuning.good_quantile);
        c.tuning.tpe_candidates = jt.value("tpe_candidates", c.tuning.tpe_candidates);
    }
    if (j.contains("gbt")) {
        const auto& jg = j.at("gbt");
        c.gbt_split_mode = jg.value("split_mode", std::string("histogram")) == "exact"
                               ? SplitMode::kExact
                               : SplitMode::kHistogram;
        c.gbt_max_bins = jg.value("max_bins", c.gbt_max_bins);
    }
    if (j.contains("arma")) {
        const auto& ja = j.at("arma");
        c.arma_max_p = ja.value("max_p", c.arma_max_p);
        c.arma_max_q = ja.value("max_q", c.arma_max_q);
        c.arma_reselect_each_step = ja.value("reselect_each_step", c.arma_reselect_each_step);
    }
    if (j.contains("spaces")) {
        const auto& js = j.at("spaces");
        if (js.contains("gbt")) c.gbt_space = space_from_json(js.at("gbt"));
        if (js.contains("ridge")) c.ridge_space = space_from_json(js.at("ridge"));
    }
    if (j.contains("output")) {
        const auto& jo = j.at("output");
        c.output_dir = jo.value("dir", c.output_dir);
        c.plot_last_days = jo.value("plot_last_days", c.plot_last_days);
        c.importance_top = jo.value("importance_top", c.importance_top);
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json(text);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    return fnv1a64(config_to_json_impl(config, true).dump());
}

namespace {

struct LagData {
    int lags = 0;
    DesignMatrix design;
    SplitIndex split{};
    AlignedPrices aligned;
    std::size_t return_offset = 0;
};

LagData build_lag_data(const PriceSeries& prices, const ReturnSeries& returns, int lags,
                       double test_fraction) {
    LagData ld;
    ld.lags = lags;
    FeatureSpec spec;
    spec.lag_count = lags;
    ld.design = assemble_design_matrix(returns, spec);
    ld.split = chronological_split(ld.design.n_rows(), test_fraction);

    // Row i targets a return index; recover the alignment from dates so the
    // prior/actual closes stay correct even if interior rows were dropped.
    std::size_t t = 0;
    ld.aligned.prior_closes.resize(ld.design.n_rows());
    ld.aligned.actual_closes.resize(ld.design.n_rows());
    bool offset_set = false;
    for (std::size_t i = 0; i < ld.design.n_rows(); ++i) {
        while (t < returns.size() && returns.dates[t] != ld.design.row_dates[i]) ++t;
        if (t >= returns.size())
            throw std::runtime_error("alignment: design row date not found in return series");
        if (!offset_set) {
            ld.return_offset = t;
            offset_set = true;
        }
        ld.aligned.prior_closes[i] = prices.closes[t];
        ld.aligned.actual_closes[i] = prices.closes[t + 1];
    }
    return ld;
}

// Error vectors of two runs restricted to their common test dates.
std::pair<std::vector<double>, std::vector<double>> aligned_errors(const RunResult& a,
                                                                   const RunResult& b) {
    std::map<std::string, double> eb;
    for (const auto& rec : b.wf.records)
        if (!rec.failed) eb.emplace(rec.date, rec.actual_return - rec.predicted_return);
    std::vector<double> ea_out, eb_out;
    for (const auto& rec : a.wf.records) {
        if (rec.failed) continue;
        const auto it = eb.find(rec.date);
        if (it == eb.end()) continue;
        ea_out.push_back(rec.actual_return - rec.predicted_return);
        eb_out.push_back(it->second);
    }
    return {std::move(ea_out), std::move(eb_out)};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentResult result;
    result.config = config;
    result.config_digest = config_hash(config);
    const int threads = resolve_threads(config.threads);

    auto stage = [](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const std::exception& e) {
            throw std::runtime_error("[" + std::string(name) + "] " + e.what());
        }
    };

    const PriceSeries prices = stage("data", [&] {
        return config.csv_path.empty() ? generate_synthetic(config.synthetic)
                                       : ingest_csv(config.csv_path, config.csv);
    });
    result.data_digest = fingerprint(prices);
    result.n_prices = prices.size();

    const ReturnSeries returns = stage("returns", [&] { return log_returns(prices); });
    result.n_returns = returns.size();

    const SplitIndex return_split =
        stage("split", [&] { return chronological_split(returns.size(), config.test_fraction); });

    result.adf = stage("stationarity", [&] {
        return adf_test(std::span<const double>(returns.returns.data(), return_split.train_end));
    });

    const bool want_arma =
        std::find(config.families.begin(), config.families.end(), "arma") != config.families.end();
    if (want_arma) {
        result.arma_order = stage("arma-order", [&] {
            return aic_order_search(
                std::span<const double>(returns.returns.data(), return_split.train_end),
                config.arma_max_p, config.arma_max_q, {}, threads);
        });
    }

    // Per-lag design matrices for the feature-based families.
    const bool want_features = std::any_of(config.families.begin(), config.families.end(),
                                           [](const std::string& f) { return f != "arma"; });
    std::vector<LagData> lag_data;
    if (want_features) {
        for (int L : config.lags)
            lag_data.push_back(stage("features", [&] {
                return build_lag_data(prices, returns, L, config.test_fraction);
            }));
    }

    // Tuning on the initial training block, one study per (family, lags).
    for (const auto& family : config.families) {
        if (family == "arma") continue;
        for (const auto& ld : lag_data) {
            const std::string key = family + "_L" + std::to_string(ld.lags);
            TuneOptions opts = config.tuning;
            opts.threads = threads;
            opts.seed = splitmix64(config.seed ^ fnv1a64(key));
            GbtParams base;
            base.split_mode = config.gbt_split_mode;
            base.max_bins = config.gbt_max_bins;
            base.threads = 1;
            base.seed = splitmix64(config.seed ^ fnv1a64(key + "/fit"));
            const auto& space = family == "gbt" ? config.gbt_space : config.ridge_space;
            result.tuning_logs[key] = stage("tuning", [&] {
                return tune_family(family, ld.design, ld.split.train_end, space, opts, base);
            });
        }
    }

    // Walk-forward grid.
    for (const auto& family : config.families) {
        for (const auto& scheme_name : config.schemes) {
            WindowScheme scheme;
            scheme.kind = scheme_name == "rolling" ? WindowKind::kRolling : WindowKind::kExpanding;
            scheme.rolling_length = config.rolling_length;

            if (family == "arma") {
                // The univariate benchmark aligns to the raw return series:
                // its test block is the final fraction of observations.
                DesignMatrix pseudo;
                pseudo.rows.assign(returns.size(), {});
                pseudo.targets = returns.returns;
                pseudo.row_dates = returns.dates;
                AlignedPrices aligned;
                aligned.prior_closes.assign(prices.closes.begin(),
                                            prices.closes.end() - 1);
                aligned.actual_closes.assign(prices.closes.begin() + 1, prices.closes.end());

                ModelSpec spec;
                spec.family = "arma";
                spec.arma_p = result.arma_order->p;
                spec.arma_q = result.arma_order->q;
                spec.arma_reselect = config.arma_reselect_each_step;
                spec.arma_max_p = config.arma_max_p;
                spec.arma_max_q = config.arma_max_q;
                spec.raw_returns = returns.returns;
                spec.row_return_offset = 0;

                RunResult rr;
                rr.run_id = "arma_" + scheme_name;
                rr.family = family;
                rr.scheme_name = scheme_name;
                rr.lags = 0;
                rr.tuned_params = {{"p", static_cast<double>(spec.arma_p)},
                                   {"q", static_cast<double>(spec.arma_q)}};
                rr.wf = stage("walkforward", [&] {
                    return walk_forward_run(pseudo, aligned, spec, return_split, scheme, threads);
                });
                rr.wf.tuned_params = rr.tuned_params;
                result.runs.push_back(std::move(rr));
                continue;
            }

            for (const auto& ld : lag_data) {
                const std::string key = family + "_L" + std::to_string(ld.lags);
                const auto& tuned = result.tuning_logs.at(key);

                ModelSpec spec;
                spec.family = family;
                if (family == "gbt") {
                    GbtParams base;
                    base.split_mode = config.gbt_split_mode;
                    base.max_bins = config.gbt_max_bins;
                    base.threads = 1;
                    base.seed = splitmix64(config.seed ^ fnv1a64(key + "/fit"));
                    spec.gbt = apply_gbt_params(base, tuned.best_params);
                } else {
                    spec.ridge_alpha = tuned.best_params.at("alpha");
                }

                RunResult rr;
                rr.run_id = family + "_" + scheme_name + "_L" + std::to_string(ld.lags);
                rr.family = family;
                rr.scheme_name = scheme_name;
                rr.lags = ld.lags;
                rr.tuned_params = tuned.best_params;
                rr.wf = stage("walkforward", [&] {
                    return walk_forward_run(ld.design, ld.aligned, spec, ld.split, scheme, threads);
                });
                rr.wf.lag_count = ld.lags;
                rr.wf.tuned_params = tuned.best_params;

                if (family == "gbt" && config.importance_top > 0) {
                    // Representative model for gain importance: the fit that
                    // predicted the final test day (largest legitimate window).
                    const auto [ws, we] =
                        window_bounds(rr.wf.records.size() - 1, ld.split.train_end, scheme);
                    std::vector<std::vector<double>> rows(
                        ld.design.rows.begin() + static_cast<std::ptrdiff_t>(ws),
                        ld.design.rows.begin() + static_cast<std::ptrdiff_t>(we));
                    std::vector<double> y(
                        ld.design.targets.begin() + static_cast<std::ptrdiff_t>(ws),
                        ld.design.targets.begin() + static_cast<std::ptrdiff_t>(we));
                    const auto model = stage("importance", [&] {
                        return fit_gbt(rows, y, spec.gbt, ld.design.feature_names);
                    });
                    auto ranked = gain_importance(model);
                    if (ranked.size() > static_cast<std::size_t>(config.importance_top))
                        ranked.resize(static_cast<std::size_t>(config.importance_top));
                    rr.importance = std::move(ranked);
                }
                result.runs.push_back(std::move(rr));
            }
        }
    }

    // Metrics per run.
    for (auto& rr : result.runs) {
        const auto actual = rr.wf.actual_returns();
        const auto predicted = rr.wf.predicted_returns();
        rr.n_steps = rr.wf.records.size();
        rr.failed = rr.wf.failed_steps();
        if (actual.empty())
            throw std::runtime_error("[evaluate] run " + rr.run_id + ": every step failed");
        rr.return_metrics = metrics(actual, predicted);
        rr.directional = directional_accuracy(actual, predicted);
        rr.price_metrics = metrics(rr.wf.actual_closes(), rr.wf.reconstructed_closes());
    }

    std::stable_sort(result.runs.begin(), result.runs.end(),
                     [](const RunResult& a, const RunResult& b) {
                         const int fa = family_rank(a.family), fb = family_rank(b.family);
                         if (fa != fb) return fa < fb;
                         const int sa = scheme_rank(a.scheme_name), sb = scheme_rank(b.scheme_name);
                         if (sa != sb) return sa < sb;
                         return a.lags < b.lags;
                     });

    // Statistical comparison of the best GBT run against the best of each
    // benchmark family, plus the directional tests on the best GBT run.
    const auto best_of = [&](const std::string& family) -> const RunResult* {
        const RunResult* best = nullptr;
        for (const auto& rr : result.runs)
            if (rr.family == family &&
                (!best || rr.return_metrics.rmse < best->return_metrics.rmse))
                best = &rr;
        return best;
    };
    if (const RunResult* best_gbt = best_of("gbt")) {
        TestsReport tests;
        tests.best_run_id = best_gbt->run_id;
        for (const auto& family : {std::string("ridge"), std::string("arma")}) {
            const RunResult* rival = best_of(family);
            if (!rival) continue;
            auto [ea, eb] = aligned_errors(*best_gbt, *rival);
            if (ea.size() < 10) continue;
            TestsReport::NamedDm entry;
            entry.versus = rival->run_id;
            entry.aligned_n = ea.size();
            entry.dm = dm_test(ea, eb);
            tests.dm.push_back(std::move(entry));
        }
        const auto actual = best_gbt->wf.actual_returns();
        const auto predicted = best_gbt->wf.predicted_returns();
        if (actual.size() >= 20) tests.pt = pt_test(actual, predicted);
        std::size_t k = 0;
        for (std::size_t i = 0; i < actual.size(); ++i)
            if ((actual[i] >= 0.0) == (predicted[i] >= 0.0)) ++k;
        tests.binomial_k = k;
        tests.binomial_n = actual.size();
        tests.binomial_p = binomial_sign_test(k, actual.size());
        if (actual.size() >= 30)
            tests.r2_ci = bootstrap_r2_ci(actual, predicted, 1000,
                                          splitmix64(config.seed ^ fnv1a64("bootstrap")));
        result.tests = std::move(tests);
    }
    return result;
}

namespace {

json run_to_json(const RunResult& rr) {
    json j;
    j["run_id"] = rr.run_id;
    j["model"] = display_family(rr.family);
    j["family"] = rr.family;
    j["window"] = rr.scheme_name;
    if (rr.lags > 0)
        j["lags"] = rr.lags;
    else
        j["lags"] = nullptr;
    j["n_steps"] = rr.n_steps;
    j["failed_steps"] = rr.failed;
    j["tuned_params"] = rr.tuned_params;
    j["returns"] = metrics_to_json(rr.return_metrics);
    j["returns"]["directional_accuracy"] = rr.directional;
    j["prices"] = metrics_to_json(rr.price_metrics);
    if (!rr.importance.empty()) {
        json imp = json::array();
        for (const auto& [name, gain] : rr.importance)
            imp.push_back(json{{"feature", name}, {"gain", gain}});
        j["importance"] = std::move(imp);
    }
    j["files"] = json{{"predictions", "predictions_" + rr.run_id + ".csv"},
                      {"price_plot", "price_plot_" + rr.run_id + ".csv"}};
    if (!rr.importance.empty()) j["files"]["importance"] = "importance_" + rr.run_id + ".csv";
    return j;
}

std::string table1_text(const ExperimentResult& result) {
    std::string out;
    out += "Out-of-sample performance on log-returns\n";
    out += "Model  Window     Lags      RMSE       MAE        R2    DA(%)\n";
    for (const auto& rr : result.runs) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-6s %-9s %5s  %s  %s  %7s  %6s\n",
                      display_family(rr.family).c_str(), rr.scheme_name.c_str(),
                      rr.lags > 0 ? std::to_string(rr.lags).c_str() : "-",
                      fixed(rr.return_metrics.rmse, 6).c_str(),
                      fixed(rr.return_metrics.mae, 6).c_str(),
                      opt_fixed(rr.return_metrics.r2, 4).c_str(),
                      fixed(rr.directional, 2).c_str());
        out += line;
    }
    return out;
}

std::string table2_text(const ExperimentResult& result) {
    std::string out;
    out += "Out-of-sample performance on reconstructed closing prices\n";
    out += "Model  Window     Lags      RMSE       MAE        R2\n";
    for (const auto& rr : result.runs) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-6s %-9s %5s  %s  %s  %7s\n",
                      display_family(rr.family).c_str(), rr.scheme_name.c_str(),
                      rr.lags > 0 ? std::to_string(rr.lags).c_str() : "-",
                      fixed(rr.price_metrics.rmse, 4).c_str(),
                      fixed(rr.price_metrics.mae, 4).c_str(),
                      opt_fixed(rr.price_metrics.r2, 4).c_str());
        out += line;
    }
    return out;
}

std::string tests_text(const TestsReport& tests) {
    std::string out;
    out += "Forecast comparison tests for " + tests.best_run_id + "\n";
    for (const auto& entry : tests.dm) {
        out += "DM vs " + entry.versus + " (n=" + std::to_string(entry.aligned_n) + "): ";
        if (entry.dm.degenerate)
            out += "degenerate (zero-variance loss differential)\n";
        else
            out += "statistic=" + fixed(entry.dm.statistic, 4) +
                   ", p=" + format_double(entry.dm.p_value) + "\n";
    }
    if (tests.pt) {
        out += "PT directional test: ";
        if (tests.pt->applicable)
            out += "statistic=" + fixed(tests.pt->statistic, 4) +
                   ", p=" + format_double(tests.pt->p_value) + "\n";
        else
            out += "inapplicable (" + tests.pt->reason + ")\n";
    }
    out += "Binomial sign test: k=" + std::to_string(tests.binomial_k) +
           ", n=" + std::to_string(tests.binomial_n) +
           ", p=" + format_double(tests.binomial_p) + "\n";
    if (tests.r2_ci)
        out += "Bootstrap 95% CI for R2 (" + std::to_string(tests.r2_ci->resamples) +
               " resamples): (" + fixed(tests.r2_ci->lower, 4) + ", " +
               fixed(tests.r2_ci->upper, 4) + ")\n";
    return out;
}

json tests_to_json(const TestsReport& tests) {
    json j;
    j["best_run_id"] = tests.best_run_id;
    json dms = json::array();
    for (const auto& entry : tests.dm) {
        json jd;
        jd["versus"] = entry.versus;
        jd["aligned_n"] = entry.aligned_n;
        jd["degenerate"] = entry.dm.degenerate;
        if (!entry.dm.degenerate) {
            jd["statistic"] = entry.dm.statistic;
            jd["p_value"] = entry.dm.p_value;
        }
        jd["loss"] = "squared";
        dms.push_back(std::move(jd));
    }
    j["dm"] = std::move(dms);
    if (tests.pt) {
        json jp;
        jp["applicable"] = tests.pt->applicable;
        if (tests.pt->applicable) {
            jp["statistic"] = tests.pt->statistic;
            jp["p_value"] = tests.pt->p_value;
        } else {
            jp["reason"] = tests.pt->reason;
        }
        j["pt"] = std::move(jp);
    }
    j["binomial"] = json{{"k", tests.binomial_k}, {"n", tests.binomial_n},
                         {"p_value", tests.binomial_p}, {"p0", 0.5}};
    if (tests.r2_ci)
        j["r2_ci"] = json{{"lower", tests.r2_ci->lower},
                          {"upper", tests.r2_ci->upper},
                          {"resamples", tests.r2_ci->resamples},
                          {"seed", tests.r2_ci->seed}};
    return j;
}

}  // namespace

void emit_report(const ExperimentResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec && !fs::is_directory(out_dir))
        throw std::runtime_error("emit_report: cannot create output directory " + out_dir);
    const auto path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

    json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["library_version"] = kLibraryVersion;
    manifest["config"] = config_to_json_impl(result.config, false);
    manifest["config_hash"] = hex64(result.config_digest);
    manifest["data_fingerprint"] = hex64(result.data_digest);
    manifest["seed"] = result.config.seed;
    manifest["n_prices"] = result.n_prices;
    manifest["n_returns"] = result.n_returns;
    write_text(path("manifest.json"), manifest.dump(2) + "\n");

    json results;
    results["schema_version"] = kSchemaVersion;
    results["config_hash"] = hex64(result.config_digest);
    results["data_fingerprint"] = hex64(result.data_digest);
    results["adf"] = json{{"statistic", result.adf.statistic},
                          {"lags", result.adf.lags},
                          {"p_band", result.adf.p_band},
                          {"cv_1pct", result.adf.cv_1pct},
                          {"cv_5pct", result.adf.cv_5pct},
                          {"cv_10pct", result.adf.cv_10pct}};
    if (result.arma_order) {
        results["arma_order"] = json{{"p", result.arma_order->p},
                                     {"q", result.arma_order->q},
                                     {"aic", result.arma_order->aic},
                                     {"constant", result.arma_order->constant},
                                     {"ar_coeffs", result.arma_order->ar_coeffs},
                                     {"ma_coeffs", result.arma_order->ma_coeffs},
                                     {"sigma2", result.arma_order->sigma2}};
    } else {
        results["arma_order"] = nullptr;
    }
    json runs = json::array();
    for (const auto& rr : result.runs) runs.push_back(run_to_json(rr));
    results["runs"] = std::move(runs);
    results["tests"] = result.tests ? tests_to_json(*result.tests) : json(nullptr);
    {
        json keys = json::array();
        for (const auto& [key, log] : result.tuning_logs) keys.push_back(key);
        results["tuning_logs"] = std::move(keys);
    }
    write_text(path("results.json"), results.dump(2) + "\n");

    // Table 1 / Table 2, machine and human shapes.
    {
        std::string csv = "model,window,lags,rmse,mae,r2,directional_accuracy\n";
        for (const auto& rr : result.runs) {
            csv += display_family(rr.family) + "," + rr.scheme_name + "," +
                   (rr.lags > 0 ? std::to_string(rr.lags) : "-") + "," +
                   format_double(rr.return_metrics.rmse) + "," +
                   format_double(rr.return_metrics.mae) + "," +
                   (rr.return_metrics.r2 ? format_double(*rr.return_metrics.r2) : "n/a") + "," +
                   format_double(rr.directional) + "\n";
        }
        write_text(path("table1.csv"), csv);
        write_text(path("table1.txt"), table1_text(result));

        std::string csv2 = "model,window,lags,rmse,mae,r2\n";
        for (const auto& rr : result.runs) {
            csv2 += display_family(rr.family) + "," + rr.scheme_name + "," +
                    (rr.lags > 0 ? std::to_string(rr.lags) : "-") + "," +
                    format_double(rr.price_metrics.rmse) + "," +
                    format_double(rr.price_metrics.mae) + "," +
                    (rr.price_metrics.r2 ? format_double(*rr.price_metrics.r2) : "n/a") + "\n";
        }
        write_text(path("table2.csv"), csv2);
        write_text(path("table2.txt"), table2_text(result));
    }

    // Per-run predictions, plot series, importance.
    for (const auto& rr : result.runs) {
        std::string csv =
            "step,date,actual_return,predicted_return,prior_close,actual_close,"
            "reconstructed_close,window_start,window_end,failed,message\n";
        for (const auto& rec : rr.wf.records) {
            csv += std::to_string(rec.step) + "," + rec.date + ",";
            if (rec.failed) {
                csv += format_double(rec.actual_return) + ",,";
                csv += format_double(rec.prior_close) + "," + format_double(rec.actual_close) + ",,";
            } else {
                csv += format_double(rec.actual_return) + "," +
                       format_double(rec.predicted_return) + "," +
                       format_double(rec.prior_close) + "," + format_double(rec.actual_close) +
                       "," + format_double(rec.reconstructed_close) + ",";
            }
            csv += std::to_string(rec.window_start) + "," + std::to_string(rec.window_end) + "," +
                   (rec.failed ? "1" : "0") + "," + rec.message + "\n";
        }
        write_text(path("predictions_" + rr.run_id + ".csv"), csv);

        const auto dates = rr.wf.dates();
        const auto actual = rr.wf.actual_closes();
        const auto reconstructed = rr.wf.reconstructed_closes();
        std::size_t first = 0;
        if (result.config.plot_last_days > 0 &&
            dates.size() > static_cast<std::size_t>(result.config.plot_last_days))
            first = dates.size() - static_cast<std::size_t>(result.config.plot_last_days);
        std::string plot = "date,actual_close,predicted_close\n";
        for (std::size_t i = first; i < dates.size(); ++i)
            plot += dates[i] + "," + format_double(actual[i]) + "," +
                    format_double(reconstructed[i]) + "\n";
        write_text(path("price_plot_" + rr.run_id + ".csv"), plot);

        if (!rr.importance.empty()) {
            std::string imp = "rank,feature,gain\n";
            for (std::size_t i = 0; i < rr.importance.size(); ++i)
                imp += std::to_string(i + 1) + "," + rr.importance[i].first + "," +
                       format_double(rr.importance[i].second) + "\n";
            write_text(path("importance_" + rr.run_id + ".csv"), imp);
        }
    }

    // Tuning trial logs: one CSV per study, params in search-space order.
    for (const auto& [key, log] : result.tuning_logs) {
        std::vector<std::string> param_names;
        if (!log.trials.empty())
            for (const auto& [name, value] : log.trials.front().params) param_names.push_back(name);
        std::string csv = "trial,seed,failed";
        for (const auto& name : param_names) csv += "," + name;
        std::size_t max_folds = 0;
        for (const auto& t : log.trials) max_folds = std::max(max_folds, t.fold_scores.size());
        for (std::size_t f = 0; f < max_folds; ++f) csv += ",fold_" + std::to_string(f);
        csv += ",cv_score,best\n";
        for (const auto& t : log.trials) {
            csv += std::to_string(t.index) + "," + std::to_string(t.seed) + "," +
                   (t.failed ? "1" : "0");
            for (const auto& name : param_names) {
                const auto it = t.params.find(name);
                csv += ",";
                if (it != t.params.end()) csv += format_double(it->second);
            }
            for (std::size_t f = 0; f < max_folds; ++f) {
                csv += ",";
                if (f < t.fold_scores.size()) csv += format_double(t.fold_scores[f]);
            }
            csv += ",";
            if (!t.failed) csv += format_double(t.cv_score);
            csv += ",";
            csv += (t.index == log.best_trial ? "1" : "0");
            csv += "\n";
        }
        write_text(path("trials_" + key + ".csv"), csv);
    }

    if (result.tests) {
        write_text(path("tests.json"), tests_to_json(*result.tests).dump(2) + "\n");
        write_text(path("tests.txt"), tests_text(*result.tests));
    }
}

}  // namespace wfcast
