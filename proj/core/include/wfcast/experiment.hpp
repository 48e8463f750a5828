#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wfcast/arma.hpp"
#include "wfcast/csv.hpp"
#include "wfcast/evaluation.hpp"
#include "wfcast/gbt.hpp"
#include "wfcast/synthetic.hpp"
#include "wfcast/tuning.hpp"
#include "wfcast/walkforward.hpp"

namespace wfcast {

/// Full experiment description. Everything a run depends on lives here, so a
/// (config, input bytes, seed) triple pins the whole report bundle.
struct ExperimentConfig {
    std::string csv_path;  // empty = synthetic source
    CsvOptions csv;
    SyntheticSpec synthetic;

    std::vector<std::string> families = {"gbt", "ridge", "arma"};
    std::vector<int> lags = {10, 20, 30};
    std::vector<std::string> schemes = {"expanding", "rolling"};
    double test_fraction = 0.2;
    std::size_t rolling_length = 800;

    TuneOptions tuning;
    SearchSpace gbt_space = SearchSpace::gbt_default();
    SearchSpace ridge_space = SearchSpace::ridge_default();
    SplitMode gbt_split_mode = SplitMode::kHistogram;
    int gbt_max_bins = 256;

    int arma_max_p = 5;
    int arma_max_q = 5;
    bool arma_reselect_each_step = false;  // re-run AIC order search per step

    std::uint64_t seed = 42;
    int threads = 0;  // 0 = hardware concurrency
    std::string output_dir = "out";
    int plot_last_days = 400;  // 0 = all test days
    int importance_top = 5;

    void validate() const;
};

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Hash of the canonical config serialization with the output directory
/// masked out, so relocating the report does not change its identity.
std::uint64_t config_hash(const ExperimentConfig& config);

struct RunResult {
    std::string run_id;  // e.g. gbt_expanding_L20, arma_rolling
    std::string family;
    std::string scheme_name;
    int lags = 0;  // 0 for the univariate ARMA benchmark
    ParamMap tuned_params;
    WalkForwardResult wf;
    Metrics return_metrics;
    Metrics price_metrics;
    double directional = 0.0;
    std::size_t n_steps = 0;
    std::size_t failed = 0;
    // Top gain features of the representative model (final training window);
    // GBT runs only.
    std::vector<std::pair<std::string, double>> importance;
};

struct TestsReport {
    std::string best_run_id;  // lowest return RMSE among GBT runs
    struct NamedDm {
        std::string versus;  // run id of the compared benchmark
        std::size_t aligned_n = 0;
        DmResult dm;
    };
    std::vector<NamedDm> dm;
    std::optional<PtResult> pt;
    std::size_t binomial_k = 0;
    std::size_t binomial_n = 0;
    double binomial_p = 1.0;
    std::optional<BootstrapCi> r2_ci;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::uint64_t config_digest = 0;
    std::uint64_t data_digest = 0;
    std::size_t n_prices = 0;
    std::size_t n_returns = 0;
    AdfResult adf;
    std::optional<ArmaModel> arma_order;  // selected on the initial train block
    std::vector<RunResult> runs;          // sorted model -> window -> lags
    std::map<std::string, TuneResult> tuning_logs;  // keyed family[_L<k>]
    std::optional<TestsReport> tests;
};

/// ingest -> returns -> features per lag -> split -> tune on the initial
/// train block -> walk-forward per scheme -> evaluate. Deterministic for a
/// fixed (config, data, seed); any stage failure carries a stage-tagged
/// message.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes the report bundle: manifest.json, results.json, table1/table2
/// (csv + txt), per-run predictions, price-plot and importance files, tuning
/// trial logs and the statistical test report. Reruns with the same config
/// and data produce byte-identical files.
void emit_report(const ExperimentResult& result, const std::string& out_dir);

}  // namespace wfcast
