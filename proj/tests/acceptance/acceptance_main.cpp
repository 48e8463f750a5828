// Acceptance suite: one line per criterion, nonzero exit if any of them fail.
// Criterion 9 needs a real index CSV (WFCAST_NEPSE_CSV or data/nepse.csv) and
// is skipped when none is supplied.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "wfcast/experiment.hpp"
#include "wfcast/ridge.hpp"

using namespace wfcast;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<std::string()> run;  // returns "" on pass, reason on failure
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "<missing:" + path + ">";
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::vector<std::string> read_lines(const std::string& path) {
    std::vector<std::string> lines;
    std::istringstream ss(read_file(path));
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

// --- criterion 1 -----------------------------------------------------------

std::string gbt_oracle_equivalence() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(811);
    std::uniform_int_distribution<std::size_t> nd(4, 30), pd(1, 3);
    std::uniform_int_distribution<int> depth_d(1, 2), rounds_d(1, 3);
    std::uniform_real_distribution<double> xd(-2.0, 2.0);
    std::normal_distribution<double> yd(0.0, 1.0);

    for (int ds = 0; ds < 50; ++ds) {
        const std::size_t n = nd(rng), p = pd(rng);
        std::vector<std::vector<double>> rows(n, std::vector<double>(p));
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& v : rows[i]) v = xd(rng);
            y[i] = yd(rng);
        }
        GbtParams params;
        params.n_estimators = rounds_d(rng);
        params.max_depth = depth_d(rng);
        params.learning_rate = 0.6;
        params.reg_lambda = ds % 2 ? 1.0 : 0.0;
        params.reg_alpha = ds % 3 ? 0.0 : 0.3;
        params.gamma = ds % 5 ? 0.0 : 0.02;
        params.min_child_weight = 1.0;
        params.split_mode = SplitMode::kExact;

        oracle::BoostParams op;
        op.rounds = params.n_estimators;
        op.max_depth = params.max_depth;
        op.learning_rate = params.learning_rate;
        op.reg_lambda = params.reg_lambda;
        op.reg_alpha = params.reg_alpha;
        op.gamma = params.gamma;
        op.min_child_weight = params.min_child_weight;

        const auto model = fit_gbt(rows, y, params);
        const auto ref = oracle::boost(rows, y, op);
        if (model.trees.size() != ref.trees.size()) return "tree count mismatch";
        for (std::size_t t = 0; t < model.trees.size(); ++t) {
            const auto& mine = model.trees[t].nodes;
            const auto& theirs = ref.trees[t].nodes;
            if (mine.size() != theirs.size())
                return "node count mismatch in dataset " + std::to_string(ds);
            for (std::size_t i = 0; i < mine.size(); ++i) {
                if (mine[i].is_leaf != theirs[i].is_leaf)
                    return "structure mismatch in dataset " + std::to_string(ds);
                if (mine[i].is_leaf) {
                    if (std::abs(mine[i].weight - theirs[i].weight) > 1e-12)
                        return "leaf weight deviates in dataset " + std::to_string(ds);
                } else if (mine[i].feature != theirs[i].feature ||
                           std::abs(mine[i].threshold - theirs[i].threshold) > 1e-12 ||
                           mine[i].left != theirs[i].left || mine[i].right != theirs[i].right) {
                    return "split mismatch in dataset " + std::to_string(ds);
                }
            }
        }
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= 10.0) return "runtime " + std::to_string(elapsed) + "s exceeds 10s";
    return "";
}

// --- criterion 2 -----------------------------------------------------------

std::string ridge_correctness() {
    std::mt19937_64 rng(812);
    std::uniform_real_distribution<double> xd(-2.0, 2.0);
    std::uniform_real_distribution<double> ad(0.0, 10.0);
    std::normal_distribution<double> yd(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<std::size_t> nd(10, 80), pd(1, 6);
        const std::size_t n = nd(rng), p = pd(rng);
        std::vector<std::vector<double>> rows(n, std::vector<double>(p));
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& v : rows[i]) v = xd(rng);
            y[i] = yd(rng);
        }
        const double alpha = trial % 5 == 0 ? 0.0 : ad(rng);
        const auto mine = fit_ridge(rows, y, alpha);
        const auto ref = oracle::ridge_normal_equations(rows, y, alpha);
        for (std::size_t j = 0; j < p; ++j)
            if (std::abs(mine.coefficients[j] - ref.coefficients[j]) > 1e-10)
                return "coefficient deviates in problem " + std::to_string(trial);
        if (std::abs(mine.intercept - ref.intercept) > 1e-10)
            return "intercept deviates in problem " + std::to_string(trial);
    }

    // alpha -> 1e9 drives every coefficient toward zero
    std::vector<std::vector<double>> rows(60, std::vector<double>(4));
    std::vector<double> y(60);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (auto& v : rows[i]) v = xd(rng);
        y[i] = 2.0 * rows[i][0] + yd(rng);
    }
    const auto shrunk = fit_ridge(rows, y, 1e9);
    for (double c : shrunk.coefficients)
        if (std::abs(c) >= 1e-4) return "alpha=1e9 left |coefficient| >= 1e-4";
    return "";
}

// --- criterion 3 -----------------------------------------------------------

ExperimentConfig leakage_config(const std::string& csv_path, const std::string& out_dir) {
    ExperimentConfig config;
    config.csv_path = csv_path;
    config.families = {"gbt"};
    config.lags = {5};
    config.schemes = {"expanding"};
    config.tuning.trials = 5;
    config.tuning.cv_folds = 4;
    config.seed = 99;
    config.threads = 2;
    config.output_dir = out_dir;
    config.gbt_space.params = {
        {"n_estimators", 20.0, 50.0, ParamScale::kInteger},
        {"max_depth", 2.0, 4.0, ParamScale::kInteger},
        {"learning_rate", 0.05, 0.3, ParamScale::kLog},
    };
    return config;
}

std::string leakage_bit_exactness() {
    const fs::path dir = "acc_tmp/leakage";
    fs::remove_all(dir);
    fs::create_directories(dir);

    SyntheticSpec spec;
    spec.n = 800;
    spec.ar_coeff = 0.3;
    spec.sigma = 0.01;
    spec.seed = 5;
    auto series = generate_synthetic(spec);
    write_price_csv((dir / "base.csv").string(), series);

    // Perturb one price deep inside the test block.
    const std::size_t k = 700;
    series.closes[k] *= 1.05;
    write_price_csv((dir / "perturbed.csv").string(), series);

    const auto base_cfg = leakage_config((dir / "base.csv").string(), (dir / "out_a").string());
    const auto pert_cfg =
        leakage_config((dir / "perturbed.csv").string(), (dir / "out_b").string());
    emit_report(run_experiment(base_cfg), base_cfg.output_dir);
    emit_report(run_experiment(pert_cfg), pert_cfg.output_dir);

    // Tuning sees only the initial 80%, so the trial log must not move.
    const auto trials_a = read_file((fs::path(base_cfg.output_dir) / "trials_gbt_L5.csv").string());
    const auto trials_b = read_file((fs::path(pert_cfg.output_dir) / "trials_gbt_L5.csv").string());
    if (trials_a != trials_b) return "tuning log changed after a test-block perturbation";

    // Returns k-1 and k moved; the earliest affected design row is
    // (k-1) - warmup. Every step that only sees earlier rows must be
    // byte-identical in the predictions file.
    const std::size_t warmup = 20;  // max(L=5, vol_20, rsi_14, mean_10)
    const std::size_t n_rows = series.size() - 1 - warmup;
    const std::size_t train_end =
        static_cast<std::size_t>(std::floor(static_cast<double>(n_rows) * 0.8));
    const std::size_t first_affected_row = k - 1 - warmup;
    const std::size_t clean_steps = first_affected_row - train_end;

    const auto lines_a =
        read_lines((fs::path(base_cfg.output_dir) / "predictions_gbt_expanding_L5.csv").string());
    const auto lines_b =
        read_lines((fs::path(pert_cfg.output_dir) / "predictions_gbt_expanding_L5.csv").string());
    if (lines_a.size() != lines_b.size()) return "prediction row count changed";
    if (clean_steps + 1 >= lines_a.size()) return "perturbation index leaves nothing to compare";
    for (std::size_t i = 0; i <= clean_steps; ++i)  // header + steps 0..clean_steps-1
        if (lines_a[i] != lines_b[i])
            return "step " + std::to_string(i) + " changed before the perturbation could reach it";
    // sanity: the perturbation is actually visible later in the run
    bool any_diff = false;
    for (std::size_t i = clean_steps + 1; i < lines_a.size(); ++i)
        any_diff = any_diff || lines_a[i] != lines_b[i];
    if (!any_diff) return "perturbation never reached the affected steps (test is vacuous)";
    return "";
}

// --- criterion 4 -----------------------------------------------------------

std::string round_trip() {
    std::mt19937_64 rng(813);
    std::normal_distribution<double> step(0.0, 0.012);
    for (int rep = 0; rep < 5; ++rep) {
        PriceSeries prices;
        double level = 1800.0;
        for (std::size_t i = 0; i < 1000; ++i) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "d%06zu", i);
            prices.dates.emplace_back(buf);
            prices.closes.push_back(level);
            level *= std::exp(step(rng));
        }
        const auto returns = log_returns(prices);
        std::vector<double> priors(prices.closes.begin(), prices.closes.end() - 1);
        const auto rebuilt = reconstruct_prices(priors, returns.returns);
        for (std::size_t t = 0; t < rebuilt.size(); ++t)
            if (std::abs(rebuilt[t] - prices.closes[t + 1]) / prices.closes[t + 1] > 1e-9)
                return "relative error above 1e-9 at index " + std::to_string(t);
    }
    return "";
}

// --- criterion 5 -----------------------------------------------------------

std::string statistics_oracles() {
    if (binomial_sign_test(8, 10) != 0.0546875) return "binomial(8,10) not exactly 56/1024";

    // Fixed loss-differential vectors; the expected statistic comes from the
    // direct mean/variance substitution on d = ea^2 - eb^2.
    std::vector<double> ea, eb;
    std::mt19937_64 rng(814);
    std::uniform_real_distribution<double> u(0.0, 1.5);
    for (int i = 0; i < 64; ++i) {
        ea.push_back(u(rng));
        eb.push_back(u(rng));
    }
    std::vector<double> d(ea.size());
    for (std::size_t i = 0; i < ea.size(); ++i) d[i] = ea[i] * ea[i] - eb[i] * eb[i];
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d.size());
    const double expected_raw = mean / std::sqrt(var / static_cast<double>(d.size()));
    const auto raw = dm_test(ea, eb, false);
    if (raw.degenerate || std::abs(raw.statistic - expected_raw) > 1e-8)
        return "DM statistic deviates from the substitution oracle";

    // the constructed mean-0.5 sd-1 differential must give exactly 5 pre-correction
    std::vector<double> ca, cb;
    for (int i = 0; i < 50; ++i) {
        ca.push_back(std::sqrt(1.5));
        cb.push_back(0.0);
    }
    for (int i = 0; i < 50; ++i) {
        ca.push_back(0.0);
        cb.push_back(std::sqrt(0.5));
    }
    const auto c = dm_test(ca, cb, false);
    if (std::abs(c.statistic - 5.0) > 1e-8) return "constructed DM statistic is not 5.0";

    const auto ab = dm_test(ea, eb);
    const auto ba = dm_test(eb, ea);
    if (std::abs(ab.statistic + ba.statistic) > 1e-10) return "DM antisymmetry violated";

    int small = 0, usable = 0;
    for (int rep = 0; rep < 200; ++rep) {
        std::mt19937_64 r1(2000 + rep), r2(9000 + rep);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<double> actual(120), predicted(120);
        for (auto& v : actual) v = g(r1);
        for (auto& v : predicted) v = g(r2);
        const auto pt = pt_test(actual, predicted);
        if (!pt.applicable) continue;
        ++usable;
        if (std::abs(pt.statistic) < 3.0) ++small;
    }
    if (usable < 195) return "too many inapplicable PT replications";
    if (static_cast<double>(small) < 0.95 * static_cast<double>(usable))
        return "PT statistic exceeded |3| in more than 5% of independent replications";
    return "";
}

// --- criterion 6 -----------------------------------------------------------

std::string synthetic_signal_recovery() {
    const auto start = std::chrono::steady_clock::now();

    SyntheticSpec spec;
    spec.n = 3001;  // 3000 returns
    spec.ar_coeff = 0.3;
    spec.sigma = 0.01;
    spec.seed = 61;
    const auto prices = generate_synthetic(spec);
    const auto returns = log_returns(prices);

    FeatureSpec fspec;
    fspec.lag_count = 10;
    const auto design = assemble_design_matrix(returns, fspec);
    const auto split = chronological_split(design.n_rows(), 0.2);

    AlignedPrices aligned;
    const auto offset = static_cast<std::size_t>(fspec.warmup_rows());
    aligned.prior_closes.resize(design.n_rows());
    aligned.actual_closes.resize(design.n_rows());
    for (std::size_t i = 0; i < design.n_rows(); ++i) {
        aligned.prior_closes[i] = prices.closes[offset + i];
        aligned.actual_closes[i] = prices.closes[offset + i + 1];
    }

    ModelSpec model;
    model.family = "gbt";
    model.gbt.n_estimators = 300;
    model.gbt.max_depth = 3;
    model.gbt.learning_rate = 0.05;
    model.gbt.subsample = 0.9;
    model.gbt.colsample_bytree = 0.9;
    model.gbt.reg_lambda = 1.0;
    model.gbt.seed = 7;
    const auto run = walk_forward_run(design, aligned, model, split, {}, 0);
    if (run.failed_steps() != 0) return "walk-forward steps failed on clean data";

    const auto actual = run.actual_returns();
    const auto predicted = run.predicted_returns();
    const double da = directional_accuracy(actual, predicted);
    if (!(da > 55.0))
        return "directional accuracy " + std::to_string(da) + " is not above 55%";

    const auto m = metrics(actual, predicted);
    const std::vector<double> zeros(actual.size(), 0.0);
    const auto zero_m = metrics(actual, zeros);
    if (!(m.rmse < zero_m.rmse))
        return "return RMSE does not beat the zero-forecast baseline";

    const auto ar = fit_arma(
        std::span<const double>(returns.returns.data(), offset + split.train_end), 1, 0);
    if (std::abs(ar.ar_coeffs[0] - 0.3) > 0.05)
        return "AR(1) baseline missed phi: " + std::to_string(ar.ar_coeffs[0]);

    const double elapsed = seconds_since(start);
    if (elapsed >= 300.0) return "runtime " + std::to_string(elapsed) + "s exceeds 5 minutes";
    return "";
}

// --- criterion 7 -----------------------------------------------------------

std::string determinism() {
    const fs::path dir = "acc_tmp/determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);

    ExperimentConfig config;
    config.synthetic.n = 520;
    config.synthetic.ar_coeff = 0.3;
    config.synthetic.sigma = 0.01;
    config.synthetic.seed = 21;
    config.families = {"gbt"};
    config.lags = {10};
    config.schemes = {"expanding"};
    config.tuning.trials = 60;  // the full budget, logged trial by trial
    config.tuning.cv_folds = 5;
    config.seed = 42;
    config.threads = 2;

    config.output_dir = (dir / "a").string();
    emit_report(run_experiment(config), config.output_dir);
    ExperimentConfig again = config;
    again.output_dir = (dir / "b").string();
    emit_report(run_experiment(again), again.output_dir);

    const auto trials = read_lines((dir / "a" / "trials_gbt_L10.csv").string());
    if (trials.size() != 61)  // header + 60 trials
        return "expected 60 logged trials, found " + std::to_string(trials.size() - 1);

    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        const auto name = entry.path().filename().string();
        if (name == "manifest.json") continue;  // embeds the output path
        if (read_file(entry.path().string()) != read_file((dir / "b" / name).string()))
            return "file " + name + " differs between identical runs";
        ++compared;
    }
    if (compared < 8) return "too few report files compared";
    return "";
}

// --- criterion 8 -----------------------------------------------------------

std::string report_shape() {
    const fs::path dir = "acc_tmp/shape";
    fs::remove_all(dir);
    fs::create_directories(dir);

    ExperimentConfig config;
    config.synthetic.n = 700;
    config.synthetic.ar_coeff = 0.25;
    config.synthetic.sigma = 0.01;
    config.synthetic.seed = 3;
    config.families = {"gbt", "ridge", "arma"};
    config.lags = {10, 20, 30};
    config.schemes = {"expanding", "rolling"};
    config.rolling_length = 300;
    config.tuning.trials = 2;
    config.tuning.cv_folds = 4;
    config.seed = 8;
    config.threads = 2;
    config.output_dir = (dir / "out").string();
    config.gbt_space.params = {
        {"n_estimators", 20.0, 60.0, ParamScale::kInteger},
        {"max_depth", 2.0, 4.0, ParamScale::kInteger},
        {"learning_rate", 0.05, 0.3, ParamScale::kLog},
    };

    const auto result = run_experiment(config);
    emit_report(result, config.output_dir);

    const auto t1 = read_lines((dir / "out" / "table1.csv").string());
    if (t1.size() != 15)  // header + 14 rows
        return "table1 has " + std::to_string(t1.size() - 1) + " rows, expected 14";
    std::size_t gbt_rows = 0, ridge_rows = 0, arma_rows = 0;
    for (std::size_t i = 1; i < t1.size(); ++i) {
        if (t1[i].rfind("GBT,", 0) == 0) ++gbt_rows;
        if (t1[i].rfind("Ridge,", 0) == 0) ++ridge_rows;
        if (t1[i].rfind("ARMA,", 0) == 0) ++arma_rows;
    }
    if (gbt_rows != 6 || ridge_rows != 6 || arma_rows != 2)
        return "row split is not 6 GBT + 6 Ridge + 2 ARMA";

    const auto t2 = read_lines((dir / "out" / "table2.csv").string());
    if (t2.size() != 15) return "table2 price section does not mirror the 14 rows";
    if (t2[0] != "model,window,lags,rmse,mae,r2") return "table2 header shape unexpected";
    return "";
}

// --- criterion 9 -----------------------------------------------------------

std::string soft_real_data(bool& skipped) {
    std::string path;
    if (const char* env = std::getenv("WFCAST_NEPSE_CSV"); env && *env) path = env;
    if (path.empty() && fs::exists("data/nepse.csv")) path = "data/nepse.csv";
    if (path.empty()) {
        skipped = true;
        return "no real index CSV supplied (set WFCAST_NEPSE_CSV)";
    }

    ExperimentConfig config;
    config.csv_path = path;
    config.families = {"gbt", "ridge", "arma"};
    config.lags = {20};
    config.schemes = {"expanding"};
    config.tuning.trials = 60;
    config.seed = 42;
    config.threads = 0;
    config.output_dir = "acc_tmp/real/out";
    const auto result = run_experiment(config);
    emit_report(result, config.output_dir);

    const RunResult *gbt = nullptr, *ridge = nullptr, *arma = nullptr;
    for (const auto& rr : result.runs) {
        if (rr.family == "gbt") gbt = &rr;
        if (rr.family == "ridge") ridge = &rr;
        if (rr.family == "arma") arma = &rr;
    }
    if (!gbt || !ridge || !arma) return "missing runs";
    if (!(gbt->return_metrics.rmse < ridge->return_metrics.rmse &&
          gbt->return_metrics.rmse < arma->return_metrics.rmse))
        return "GBT does not have the lowest return RMSE";
    if (!(gbt->directional > ridge->directional && gbt->directional > arma->directional))
        return "GBT does not have the highest directional accuracy";
    if (!(ridge->return_metrics.rmse <= arma->return_metrics.rmse * 1.02))
        return "ridge vs ARMA ordering broken beyond tolerance";
    if (std::abs(gbt->directional - 65.15) > 5.0)
        return "directional accuracy " + std::to_string(gbt->directional) +
               " outside 65.15 +/- 5";
    return "";
}

}  // namespace

int main() {
    bool c9_skipped = false;
    std::vector<Criterion> criteria = {
        {1, "GBT oracle equivalence", gbt_oracle_equivalence},
        {2, "ridge correctness", ridge_correctness},
        {3, "leakage bit-exactness", leakage_bit_exactness},
        {4, "price round trip", round_trip},
        {5, "statistics oracles", statistics_oracles},
        {6, "synthetic signal recovery", synthetic_signal_recovery},
        {7, "determinism", determinism},
        {8, "report shape", report_shape},
        {9, "soft real-data targets", [&] { return soft_real_data(c9_skipped); }},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string reason;
        try {
            reason = criterion.run();
        } catch (const std::exception& e) {
            reason = std::string("exception: ") + e.what();
        }
        const double elapsed = seconds_since(start);
        if (criterion.id == 9 && c9_skipped) {
            std::cout << "criterion 9 (" << criterion.name << "): SKIP — " << reason << "\n";
            continue;
        }
        if (reason.empty()) {
            std::printf("criterion %d (%s): PASS [%.1fs]\n", criterion.id,
                        criterion.name.c_str(), elapsed);
        } else {
            std::printf("criterion %d (%s): FAIL — %s [%.1fs]\n", criterion.id,
                        criterion.name.c_str(), reason.c_str(), elapsed);
            ++failures;
        }
        std::fflush(stdout);
    }
    fs::remove_all("acc_tmp");
    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
