// Command-line front end: ingest/synth for data handling, tune/walkforward/
// evaluate for single studies, and run/report for the full experiment grid.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "wfcast/experiment.hpp"
#include "wfcast/parallel.hpp"
#include "wfcast/util.hpp"
#include "wfcast/version.hpp"

namespace {

using nlohmann::json;
using namespace wfcast;

// Precedence for the output directory: explicit flag, then the
// WFCAST_OUTPUT_DIR environment variable, then the config/default.
std::string resolve_output_dir(const std::string& flag_value, const std::string& fallback) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("WFCAST_OUTPUT_DIR"); env && *env) return env;
    return fallback;
}

struct DataFlags {
    std::string input;
    std::string date_col = "date";
    std::string close_col = "close";
    std::string date_format = "auto";
    std::size_t synth_n = 2000;
    double synth_phi = 0.0;
    double synth_sigma = 0.01;
    std::uint64_t synth_seed = 42;
    double synth_price = 1000.0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--input", input, "CSV of daily prices (omit to use a synthetic series)");
        cmd->add_option("--date-col", date_col, "date column name");
        cmd->add_option("--close-col", close_col, "close column name");
        cmd->add_option("--date-format", date_format, "auto|iso|dmy|mdy");
        cmd->add_option("--synth-n", synth_n, "synthetic series length");
        cmd->add_option("--synth-phi", synth_phi, "synthetic AR(1) coefficient");
        cmd->add_option("--synth-sigma", synth_sigma, "synthetic noise sd");
        cmd->add_option("--synth-seed", synth_seed, "synthetic generator seed");
        cmd->add_option("--synth-price", synth_price, "synthetic initial price");
    }

    PriceSeries load() const {
        if (!input.empty()) {
            CsvOptions opts;
            opts.date_column = date_col;
            opts.close_column = close_col;
            opts.date_format = date_format;
            return ingest_csv(input, opts);
        }
        SyntheticSpec spec;
        spec.n = synth_n;
        spec.ar_coeff = synth_phi;
        spec.sigma = synth_sigma;
        spec.seed = synth_seed;
        spec.initial_price = synth_price;
        return generate_synthetic(spec);
    }
};

std::vector<RegimeSegment> parse_regimes(const std::string& text) {
    std::vector<RegimeSegment> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw CLI::ValidationError("--regimes", "expected len:mult[,len:mult...]");
        out.push_back(RegimeSegment{std::stoull(item.substr(0, colon)),
                                    std::stod(item.substr(colon + 1))});
    }
    return out;
}

json metrics_json(const Metrics& m, double da) {
    json j;
    j["rmse"] = m.rmse;
    j["mae"] = m.mae;
    j["r2"] = m.r2 ? json(*m.r2) : json(nullptr);
    j["directional_accuracy"] = da;
    return j;
}

struct PredictionRows {
    std::vector<std::string> dates;
    std::vector<double> actual, predicted;
};

PredictionRows read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string header;
    std::getline(in, header);
    std::stringstream hs(header);
    std::vector<std::string> names;
    std::string cell;
    while (std::getline(hs, cell, ',')) names.push_back(cell);
    int di = -1, ai = -1, pi = -1;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "date") di = static_cast<int>(i);
        if (names[i] == "actual_return") ai = static_cast<int>(i);
        if (names[i] == "predicted_return") pi = static_cast<int>(i);
    }
    if (di < 0 || ai < 0 || pi < 0)
        throw std::runtime_error(path + ": need date, actual_return, predicted_return columns");
    PredictionRows rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        const auto need = static_cast<std::size_t>(std::max({di, ai, pi}));
        if (cells.size() <= need) continue;
        const auto& pv = cells[static_cast<std::size_t>(pi)];
        if (pv.empty()) continue;  // failed step
        rows.dates.push_back(cells[static_cast<std::size_t>(di)]);
        rows.actual.push_back(std::stod(cells[static_cast<std::size_t>(ai)]));
        rows.predicted.push_back(std::stod(pv));
    }
    return rows;
}

int cmd_ingest(const DataFlags& data, const std::string& echo_path) {
    const auto series = data.load();
    std::cout << "rows: " << series.size() << "\n"
              << "first: " << series.dates.front() << "  last: " << series.dates.back() << "\n"
              << "fingerprint: " << hex64(fingerprint(series)) << "\n";
    if (!echo_path.empty()) {
        write_price_csv(echo_path, series);
        std::cout << "echoed to " << echo_path << "\n";
    }
    return 0;
}

int cmd_synth(const SyntheticSpec& spec, const std::string& output) {
    const auto series = generate_synthetic(spec);
    write_price_csv(output, series);
    std::cout << "wrote " << series.size() << " rows to " << output << " (fingerprint "
              << hex64(fingerprint(series)) << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-step-ahead return forecasting benchmark"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kLibraryVersion);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate and fingerprint a price CSV");
    DataFlags ingest_data;
    ingest_data.add_to(ingest);
    std::string echo_path;
    ingest->add_option("--echo", echo_path, "write the canonical date,close CSV here");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic AR(1) price series");
    SyntheticSpec synth_spec;
    std::string synth_out = "synthetic.csv";
    std::string regime_text;
    synth->add_option("--n", synth_spec.n, "series length (prices)");
    synth->add_option("--phi", synth_spec.ar_coeff, "AR(1) coefficient");
    synth->add_option("--sigma", synth_spec.sigma, "noise sd");
    synth->add_option("--seed", synth_spec.seed, "generator seed");
    synth->add_option("--initial-price", synth_spec.initial_price, "price at t0");
    synth->add_option("--regimes", regime_text, "volatility schedule len:mult[,len:mult...]");
    synth->add_option("--output", synth_out, "output CSV path");

    // tune
    auto* tune_cmd = app.add_subcommand("tune", "hyperparameter search on the initial train block");
    DataFlags tune_data;
    tune_data.add_to(tune_cmd);
    std::string tune_family_name = "gbt";
    int tune_lags = 20;
    TuneOptions tune_opts;
    double tune_test_fraction = 0.2;
    std::string tune_out_flag;
    int tune_threads = 0;
    std::string tune_sampler = "tpe";
    tune_cmd->add_option("--family", tune_family_name, "gbt|ridge")
        ->check(CLI::IsMember({"gbt", "ridge"}));
    tune_cmd->add_option("--lags", tune_lags, "lagged-return count");
    tune_cmd->add_option("--trials", tune_opts.trials, "trial budget");
    tune_cmd->add_option("--folds", tune_opts.cv_folds, "time-series CV folds");
    tune_cmd->add_option("--seed", tune_opts.seed, "search seed");
    tune_cmd->add_option("--sampler", tune_sampler, "tpe|random")
        ->check(CLI::IsMember({"tpe", "random"}));
    tune_cmd->add_option("--test-fraction", tune_test_fraction, "holdout fraction excluded from tuning");
    tune_cmd->add_option("--threads", tune_threads, "worker threads (0 = all cores)");
    tune_cmd->add_option("--output-dir", tune_out_flag, "where to write the trial log");

    // walkforward
    auto* wf_cmd = app.add_subcommand("walkforward", "one-step-ahead evaluation of one configuration");
    DataFlags wf_data;
    wf_data.add_to(wf_cmd);
    std::string wf_family = "gbt";
    int wf_lags = 20;
    std::string wf_scheme = "expanding";
    std::size_t wf_rolling = 800;
    double wf_test_fraction = 0.2;
    std::string wf_params_path;
    std::string wf_out_flag;
    int wf_threads = 0;
    std::uint64_t wf_seed = 42;
    wf_cmd->add_option("--family", wf_family, "gbt|ridge|arma")
        ->check(CLI::IsMember({"gbt", "ridge", "arma"}));
    wf_cmd->add_option("--lags", wf_lags, "lagged-return count (gbt/ridge)");
    wf_cmd->add_option("--scheme", wf_scheme, "expanding|rolling")
        ->check(CLI::IsMember({"expanding", "rolling"}));
    wf_cmd->add_option("--rolling-length", wf_rolling, "rolling window rows");
    wf_cmd->add_option("--test-fraction", wf_test_fraction, "test block fraction");
    wf_cmd->add_option("--params", wf_params_path, "tuned parameter JSON (name -> value)");
    wf_cmd->add_option("--seed", wf_seed, "model seed");
    wf_cmd->add_option("--threads", wf_threads, "worker threads (0 = all cores)");
    wf_cmd->add_option("--output-dir", wf_out_flag, "where to write predictions");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "metrics and tests over a predictions CSV");
    std::string eval_path, eval_versus;
    std::uint64_t eval_seed = 42;
    eval_cmd->add_option("--predictions", eval_path, "predictions_*.csv from walkforward/run")
        ->required();
    eval_cmd->add_option("--versus", eval_versus, "benchmark predictions CSV for the DM test");
    eval_cmd->add_option("--seed", eval_seed, "bootstrap seed");

    // report
    auto* report_cmd = app.add_subcommand("report", "re-render tables from a results.json");
    std::string report_results, report_out_flag;
    report_cmd->add_option("--results", report_results, "results.json path")->required();
    report_cmd->add_option("--output-dir", report_out_flag, "where to write the tables");

    // run
    auto* run_cmd = app.add_subcommand("run", "full pipeline: ingest, tune, walk-forward, report");
    std::string run_config_path, run_out_flag;
    std::optional<std::uint64_t> run_seed;
    std::optional<int> run_threads;
    DataFlags run_data;
    run_data.add_to(run_cmd);
    std::vector<std::string> run_families;
    std::vector<int> run_lags;
    std::vector<std::string> run_schemes;
    std::optional<int> run_trials;
    std::optional<double> run_test_fraction;
    run_cmd->add_option("--config", run_config_path, "experiment config JSON");
    run_cmd->add_option("--output-dir", run_out_flag, "report directory");
    run_cmd->add_option("--seed", run_seed, "master seed");
    run_cmd->add_option("--threads", run_threads, "worker threads (0 = all cores)");
    run_cmd->add_option("--families", run_families, "subset of gbt,ridge,arma");
    run_cmd->add_option("--lags", run_lags, "lag configurations");
    run_cmd->add_option("--schemes", run_schemes, "subset of expanding,rolling");
    run_cmd->add_option("--trials", run_trials, "tuning trial budget");
    run_cmd->add_option("--test-fraction", run_test_fraction, "test block fraction");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(ingest_data, echo_path);

        if (*synth) {
            if (!regime_text.empty()) synth_spec.regimes = parse_regimes(regime_text);
            return cmd_synth(synth_spec, synth_out);
        }

        if (*tune_cmd) {
            const auto series = tune_data.load();
            const auto returns = log_returns(series);
            FeatureSpec fspec;
            fspec.lag_count = tune_lags;
            const auto design = assemble_design_matrix(returns, fspec);
            const auto split = chronological_split(design.n_rows(), tune_test_fraction);
            tune_opts.threads = resolve_threads(tune_threads);
            tune_opts.use_tpe = tune_sampler == "tpe";
            const auto space = tune_family_name == "gbt" ? SearchSpace::gbt_default()
                                                         : SearchSpace::ridge_default();
            GbtParams base;
            base.seed = tune_opts.seed;
            const auto result =
                tune_family(tune_family_name, design, split.train_end, space, tune_opts, base);

            const auto out_dir = resolve_output_dir(tune_out_flag, "out");
            std::filesystem::create_directories(out_dir);
            json best;
            best["family"] = tune_family_name;
            best["lags"] = tune_lags;
            best["best_trial"] = result.best_trial;
            best["best_cv_rmse"] = result.trials[static_cast<std::size_t>(result.best_trial)].cv_score;
            best["params"] = result.best_params;
            const auto best_path =
                (std::filesystem::path(out_dir) / ("best_params_" + tune_family_name + "_L" +
                                                   std::to_string(tune_lags) + ".json")).string();
            std::ofstream(best_path) << best.dump(2) << "\n";
            std::cout << best.dump(2) << "\nwrote " << best_path << "\n";
            return 0;
        }

        if (*wf_cmd) {
            const auto series = wf_data.load();
            const auto returns = log_returns(series);

            ExperimentConfig config;
            if (!wf_data.input.empty()) {
                config.csv_path = wf_data.input;
                config.csv.date_column = wf_data.date_col;
                config.csv.close_column = wf_data.close_col;
                config.csv.date_format = wf_data.date_format;
            } else {
                config.synthetic.n = wf_data.synth_n;
                config.synthetic.ar_coeff = wf_data.synth_phi;
                config.synthetic.sigma = wf_data.synth_sigma;
                config.synthetic.seed = wf_data.synth_seed;
                config.synthetic.initial_price = wf_data.synth_price;
            }
            config.families = {wf_family};
            config.lags = {wf_lags};
            config.schemes = {wf_scheme};
            config.rolling_length = wf_rolling;
            config.test_fraction = wf_test_fraction;
            config.seed = wf_seed;
            config.threads = wf_threads;
            config.tuning.trials = 1;  // single-config run: no search, params below
            config.output_dir = resolve_output_dir(wf_out_flag, "out");

            // With --params the single tuning trial is pinned to the given
            // values by collapsing each bound; otherwise mid-range defaults.
            if (!wf_params_path.empty() && wf_family != "arma") {
                std::ifstream pin(wf_params_path);
                if (!pin) throw std::runtime_error("cannot open " + wf_params_path);
                const auto pj = json::parse(pin);
                const auto& src = pj.contains("params") ? pj.at("params") : pj;
                auto& space = wf_family == "gbt" ? config.gbt_space : config.ridge_space;
                for (auto& def : space.params) {
                    if (!src.contains(def.name)) continue;
                    const double v = src.at(def.name).get<double>();
                    const double eps = std::max(1e-9, std::abs(v) * 1e-9);
                    def.lower = def.scale == ParamScale::kLog ? std::max(v * (1 - 1e-9), 1e-12)
                                                              : v - eps;
                    def.upper = def.scale == ParamScale::kLog ? v * (1 + 1e-9) : v + eps;
                }
            }

            const auto result = run_experiment(config);
            emit_report(result, config.output_dir);
            const auto& rr = result.runs.front();
            std::cout << "run " << rr.run_id << ": steps=" << rr.n_steps
                      << " failed=" << rr.failed << "\n"
                      << metrics_json(rr.return_metrics, rr.directional).dump(2) << "\n"
                      << "report in " << config.output_dir << "\n";
            return 0;
        }

        if (*eval_cmd) {
            const auto rows = read_predictions(eval_path);
            if (rows.actual.empty()) throw std::runtime_error("no usable prediction rows");
            json out;
            const auto m = metrics(rows.actual, rows.predicted);
            out["metrics"] = metrics_json(m, directional_accuracy(rows.actual, rows.predicted));
            out["n"] = rows.actual.size();
            if (rows.actual.size() >= 20) {
                const auto pt = pt_test(rows.actual, rows.predicted);
                out["pt"] = pt.applicable
                                ? json{{"statistic", pt.statistic}, {"p_value", pt.p_value}}
                                : json{{"inapplicable", pt.reason}};
            }
            std::size_t k = 0;
            for (std::size_t i = 0; i < rows.actual.size(); ++i)
                if ((rows.actual[i] >= 0.0) == (rows.predicted[i] >= 0.0)) ++k;
            out["binomial"] = json{{"k", k},
                                   {"n", rows.actual.size()},
                                   {"p_value", binomial_sign_test(k, rows.actual.size())}};
            if (rows.actual.size() >= 30) {
                const auto ci = bootstrap_r2_ci(rows.actual, rows.predicted, 1000, eval_seed);
                out["r2_ci"] = json{{"lower", ci.lower}, {"upper", ci.upper}};
            }
            if (!eval_versus.empty()) {
                const auto other = read_predictions(eval_versus);
                std::map<std::string, double> versus_err;
                for (std::size_t i = 0; i < other.dates.size(); ++i)
                    versus_err.emplace(other.dates[i], other.actual[i] - other.predicted[i]);
                std::vector<double> ea, eb;
                for (std::size_t i = 0; i < rows.dates.size(); ++i) {
                    const auto it = versus_err.find(rows.dates[i]);
                    if (it == versus_err.end()) continue;
                    ea.push_back(rows.actual[i] - rows.predicted[i]);
                    eb.push_back(it->second);
                }
                if (ea.size() >= 10) {
                    const auto dm = dm_test(ea, eb);
                    out["dm"] = dm.degenerate
                                    ? json{{"degenerate", true}, {"aligned_n", ea.size()}}
                                    : json{{"statistic", dm.statistic},
                                           {"p_value", dm.p_value},
                                           {"aligned_n", ea.size()}};
                }
            }
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (*report_cmd) {
            std::ifstream in(report_results);
            if (!in) throw std::runtime_error("cannot open " + report_results);
            const auto j = json::parse(in);
            const auto out_dir = resolve_output_dir(report_out_flag, "out");
            std::filesystem::create_directories(out_dir);
            std::string t1 = "model,window,lags,rmse,mae,r2,directional_accuracy\n";
            std::string t2 = "model,window,lags,rmse,mae,r2\n";
            for (const auto& run : j.at("runs")) {
                const std::string lags =
                    run.at("lags").is_null() ? "-" : std::to_string(run.at("lags").get<int>());
                const auto& rm = run.at("returns");
                const auto& pm = run.at("prices");
                auto num = [](const json& v) {
                    return v.is_null() ? std::string("n/a") : format_double(v.get<double>());
                };
                t1 += run.at("model").get<std::string>() + "," +
                      run.at("window").get<std::string>() + "," + lags + "," +
                      num(rm.at("rmse")) + "," + num(rm.at("mae")) + "," + num(rm.at("r2")) + "," +
                      num(rm.at("directional_accuracy")) + "\n";
                t2 += run.at("model").get<std::string>() + "," +
                      run.at("window").get<std::string>() + "," + lags + "," +
                      num(pm.at("rmse")) + "," + num(pm.at("mae")) + "," + num(pm.at("r2")) + "\n";
            }
            std::ofstream((std::filesystem::path(out_dir) / "table1.csv").string()) << t1;
            std::ofstream((std::filesystem::path(out_dir) / "table2.csv").string()) << t2;
            std::cout << "re-rendered tables into " << out_dir << "\n";
            return 0;
        }

        if (*run_cmd) {
            ExperimentConfig config;
            if (!run_config_path.empty()) config = load_config(run_config_path);
            if (!run_data.input.empty()) {
                config.csv_path = run_data.input;
                config.csv.date_column = run_data.date_col;
                config.csv.close_column = run_data.close_col;
                config.csv.date_format = run_data.date_format;
            } else if (run_config_path.empty()) {
                config.synthetic.n = run_data.synth_n;
                config.synthetic.ar_coeff = run_data.synth_phi;
                config.synthetic.sigma = run_data.synth_sigma;
                config.synthetic.seed = run_data.synth_seed;
                config.synthetic.initial_price = run_data.synth_price;
            }
            if (!run_families.empty()) config.families = run_families;
            if (!run_lags.empty()) config.lags = run_lags;
            if (!run_schemes.empty()) config.schemes = run_schemes;
            if (run_trials) config.tuning.trials = *run_trials;
            if (run_test_fraction) config.test_fraction = *run_test_fraction;
            if (run_seed) config.seed = *run_seed;
            if (run_threads) config.threads = *run_threads;
            config.output_dir = resolve_output_dir(run_out_flag, config.output_dir);

            const auto result = run_experiment(config);
            emit_report(result, config.output_dir);
            std::cout << "config_hash " << hex64(result.config_digest) << "\n"
                      << "data_fingerprint " << hex64(result.data_digest) << "\n"
                      << result.runs.size() << " run(s); report in " << config.output_dir << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
