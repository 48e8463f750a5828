#include "wfcast/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "wfcast/evaluation.hpp"
#include "wfcast/parallel.hpp"
#include "wfcast/ridge.hpp"
#include "wfcast/util.hpp"

namespace wfcast {

namespace {

double to_internal(const ParamDef& def, double v) {
    return def.scale == ParamScale::kLog ? std::log(v) : v;
}

double from_internal(const ParamDef& def, double u) {
    double v = def.scale == ParamScale::kLog ? std::exp(u) : u;
    if (def.scale == ParamScale::kInteger) v = std::round(v);
    return std::clamp(v, def.lower, def.upper);
}

double uniform_draw(const ParamDef& def, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(to_internal(def, def.lower),
                                                to_internal(def, def.upper));
    return from_internal(def, dist(rng));
}

double kde_log_density(const std::vector<double>& centers, double bandwidth, double x) {
    double acc = 0.0;
    for (double mu : centers) {
        const double z = (x - mu) / bandwidth;
        acc += std::exp(-0.5 * z * z);
    }
    const double density = acc / (static_cast<double>(centers.size()) * bandwidth *
                                  std::sqrt(2.0 * 3.14159265358979323846));
    return std::log(std::max(density, 1e-300));
}

double silverman_bandwidth(const std::vector<double>& values, double range) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    const double sigma = std::sqrt(var);
    double h = 1.06 * sigma * std::pow(static_cast<double>(values.size()), -0.2);
    return std::max({h, 1e-3 * range, 1e-12});
}

}  // namespace

void SearchSpace::validate() const {
    if (params.empty()) throw std::invalid_argument("SearchSpace: no parameters");
    for (const auto& def : params) {
        if (!(def.lower < def.upper))
            throw std::invalid_argument("SearchSpace: lower must be < upper for " + def.name);
        if (def.scale == ParamScale::kLog && !(def.lower > 0.0))
            throw std::invalid_argument("SearchSpace: log scale requires positive bounds for " +
                                        def.name);
    }
}

const ParamDef* SearchSpace::find(const std::string& name) const {
    for (const auto& def : params)
        if (def.name == name) return &def;
    return nullptr;
}

SearchSpace SearchSpace::gbt_default() {
    SearchSpace s;
    s.params = {
        {"n_estimators", 200.0, 1200.0, ParamScale::kInteger},
        {"max_depth", 3.0, 10.0, ParamScale::kInteger},
        {"learning_rate", 0.01, 0.3, ParamScale::kLog},
        {"subsample", 0.6, 1.0, ParamScale::kLinear},
        {"colsample_bytree", 0.6, 1.0, ParamScale::kLinear},
        {"gamma", 0.0, 5.0, ParamScale::kLinear},
        {"min_child_weight", 1.0, 10.0, ParamScale::kInteger},
        {"reg_alpha", 0.0, 1.0, ParamScale::kLinear},
        {"reg_lambda", 0.0, 2.0, ParamScale::kLinear},
    };
    return s;
}

SearchSpace SearchSpace::ridge_default() {
    SearchSpace s;
    s.params = {{"alpha", 1e-4, 1e3, ParamScale::kLog}};
    return s;
}

std::vector<CvFold> ts_cv_splits(std::size_t n, int k) {
    if (k < 1) throw std::invalid_argument("ts_cv_splits: k must be >= 1");
    const auto chunks = static_cast<std::size_t>(k) + 1;
    if (n < 2 * chunks)
        throw std::invalid_argument("ts_cv_splits: need at least " + std::to_string(2 * chunks) +
                                    " rows for k=" + std::to_string(k) + ", got " +
                                    std::to_string(n));
    const std::size_t base = n / chunks;
    const std::size_t remainder = n - base * chunks;
    std::vector<std::size_t> boundaries;  // cumulative chunk ends
    boundaries.reserve(chunks);
    std::size_t acc = base + remainder;   // remainder joins the first chunk
    boundaries.push_back(acc);
    for (std::size_t i = 1; i < chunks; ++i) {
        acc += base;
        boundaries.push_back(acc);
    }
    std::vector<CvFold> folds;
    folds.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        folds.push_back(CvFold{boundaries[static_cast<std::size_t>(i)],
                               boundaries[static_cast<std::size_t>(i)],
                               boundaries[static_cast<std::size_t>(i) + 1]});
    return folds;
}

ParamMap default_params(const SearchSpace& space) {
    space.validate();
    ParamMap out;
    for (const auto& def : space.params) {
        const double mid = 0.5 * (to_internal(def, def.lower) + to_internal(def, def.upper));
        out[def.name] = from_internal(def, mid);
    }
    return out;
}

ParamMap suggest_params(const SearchSpace& space, const std::vector<Trial>& history,
                        std::uint64_t seed, const TuneOptions& opts) {
    space.validate();
    std::mt19937_64 rng(seed);

    std::vector<const Trial*> usable;
    for (const auto& t : history)
        if (!t.failed) usable.push_back(&t);

    ParamMap out;
    if (!opts.use_tpe || usable.size() < static_cast<std::size_t>(opts.warmup_trials)) {
        for (const auto& def : space.params) out[def.name] = uniform_draw(def, rng);
        return out;
    }

    // Stable order: by score, then by trial index, so equal scores cannot
    // reshuffle the good/bad split between runs.
    std::stable_sort(usable.begin(), usable.end(), [](const Trial* a, const Trial* b) {
        if (a->cv_score != b->cv_score) return a->cv_score < b->cv_score;
        return a->index < b->index;
    });
    const auto n_good = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::ceil(opts.good_quantile * static_cast<double>(usable.size()))));

    for (const auto& def : space.params) {
        std::vector<double> good, bad;
        for (std::size_t i = 0; i < usable.size(); ++i) {
            const auto it = usable[i]->params.find(def.name);
            if (it == usable[i]->params.end()) continue;
            (i < n_good ? good : bad).push_back(to_internal(def, it->second));
        }
        if (good.empty() || bad.empty()) {
            out[def.name] = uniform_draw(def, rng);
            continue;
        }
        const double lo = to_internal(def, def.lower), hi = to_internal(def, def.upper);
        const double range = hi - lo;
        const double h_good = silverman_bandwidth(good, range);
        const double h_bad = silverman_bandwidth(bad, range);

        std::uniform_int_distribution<std::size_t> comp(0, good.size() - 1);
        std::normal_distribution<double> noise(0.0, 1.0);
        double best_x = 0.0, best_score = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < opts.tpe_candidates; ++c) {
            double x = good[comp(rng)] + h_good * noise(rng);
            x = std::clamp(x, lo, hi);
            const double score = kde_log_density(good, h_good, x) - kde_log_density(bad, h_bad, x);
            if (score > best_score) {
                best_score = score;
                best_x = x;
            }
        }
        out[def.name] = from_internal(def, best_x);
    }
    return out;
}

TuneResult tune(const TrialEvaluator& evaluator, const SearchSpace& space,
                const TuneOptions& opts) {
    space.validate();
    if (opts.trials < 1) throw std::invalid_argument("tune: need at least 1 trial");

    TuneResult result;
    result.trials.reserve(static_cast<std::size_t>(opts.trials));
    for (int t = 0; t < opts.trials; ++t) {
        Trial trial;
        trial.index = t;
        trial.seed = splitmix64(opts.seed ^ (0x51ed2701ab7c3a1dULL + static_cast<std::uint64_t>(t)));
        trial.params = t == 0 ? default_params(space)
                              : suggest_params(space, result.trials, trial.seed, opts);
        auto scores = evaluator(trial.params);
        if (scores && !scores->empty()) {
            trial.fold_scores = std::move(*scores);
            double mean = 0.0;
            for (double s : trial.fold_scores) mean += s;
            trial.cv_score = mean / static_cast<double>(trial.fold_scores.size());
            trial.failed = !std::isfinite(trial.cv_score);
        } else {
            trial.failed = true;
        }
        result.trials.push_back(std::move(trial));
    }

    for (const auto& trial : result.trials) {
        if (trial.failed) continue;
        if (result.best_trial < 0 ||
            trial.cv_score < result.trials[static_cast<std::size_t>(result.best_trial)].cv_score)
            result.best_trial = trial.index;
    }
    if (result.best_trial < 0) throw std::runtime_error("tune: every trial failed");
    result.best_params = result.trials[static_cast<std::size_t>(result.best_trial)].params;
    return result;
}

GbtParams apply_gbt_params(GbtParams base, const ParamMap& params) {
    for (const auto& [name, value] : params) {
        if (name == "n_estimators")
            base.n_estimators = static_cast<int>(std::lround(value));
        else if (name == "max_depth")
            base.max_depth = static_cast<int>(std::lround(value));
        else if (name == "learning_rate")
            base.learning_rate = value;
        else if (name == "subsample")
            base.subsample = value;
        else if (name == "colsample_bytree")
            base.colsample_bytree = value;
        else if (name == "gamma")
            base.gamma = value;
        else if (name == "min_child_weight")
            base.min_child_weight = value;
        else if (name == "reg_alpha")
            base.reg_alpha = value;
        else if (name == "reg_lambda")
            base.reg_lambda = value;
        else
            throw std::invalid_argument("apply_gbt_params: unknown parameter " + name);
    }
    return base;
}

TuneResult tune_family(const std::string& family, const DesignMatrix& design,
                       std::size_t train_rows, const SearchSpace& space, const TuneOptions& opts,
                       const GbtParams& gbt_base) {
    if (train_rows > design.n_rows())
        throw std::invalid_argument("tune_family: train_rows exceeds design rows");
    const auto folds = ts_cv_splits(train_rows, opts.cv_folds);

    auto fold_rmse = [&](const CvFold& fold, auto&& fit_predict) {
        std::vector<double> actual(design.targets.begin() + static_cast<std::ptrdiff_t>(fold.val_begin),
                                   design.targets.begin() + static_cast<std::ptrdiff_t>(fold.val_end));
        const auto predicted = fit_predict(fold);
        return metrics(actual, predicted).rmse;
    };

    TrialEvaluator evaluator;
    if (family == "gbt") {
        evaluator = [&, gbt_base](const ParamMap& params) -> std::optional<std::vector<double>> {
            const GbtParams fit_params = apply_gbt_params(gbt_base, params);
            std::vector<double> scores(folds.size());
            try {
                parallel_for(folds.size(), opts.threads, [&](std::size_t i) {
                    const auto& fold = folds[i];
                    std::vector<std::vector<double>> train_rows_v(
                        design.rows.begin(), design.rows.begin() + static_cast<std::ptrdiff_t>(fold.train_end));
                    std::vector<double> train_y(
                        design.targets.begin(), design.targets.begin() + static_cast<std::ptrdiff_t>(fold.train_end));
                    auto model = fit_gbt(train_rows_v, train_y, fit_params, design.feature_names);
                    scores[i] = fold_rmse(fold, [&](const CvFold& f) {
                        std::vector<std::vector<double>> val_rows(
                            design.rows.begin() + static_cast<std::ptrdiff_t>(f.val_begin),
                            design.rows.begin() + static_cast<std::ptrdiff_t>(f.val_end));
                        return predict_gbt(model, val_rows);
                    });
                });
            } catch (const std::exception&) {
                return std::nullopt;
            }
            return scores;
        };
    } else if (family == "ridge") {
        evaluator = [&](const ParamMap& params) -> std::optional<std::vector<double>> {
            const auto it = params.find("alpha");
            if (it == params.end()) return std::nullopt;
            const double alpha = it->second;
            std::vector<double> scores(folds.size());
            try {
                parallel_for(folds.size(), opts.threads, [&](std::size_t i) {
                    const auto& fold = folds[i];
                    std::vector<std::vector<double>> train_rows_v(
                        design.rows.begin(), design.rows.begin() + static_cast<std::ptrdiff_t>(fold.train_end));
                    std::vector<double> train_y(
                        design.targets.begin(), design.targets.begin() + static_cast<std::ptrdiff_t>(fold.train_end));
                    auto model = fit_ridge(train_rows_v, train_y, alpha);
                    scores[i] = fold_rmse(fold, [&](const CvFold& f) {
                        std::vector<std::vector<double>> val_rows(
                            design.rows.begin() + static_cast<std::ptrdiff_t>(f.val_begin),
                            design.rows.begin() + static_cast<std::ptrdiff_t>(f.val_end));
                        return predict_ridge(model, val_rows);
                    });
                });
            } catch (const std::exception&) {
                return std::nullopt;
            }
            return scores;
        };
    } else {
        throw std::invalid_argument("tune_family: unknown family " + family +
                                    " (expected gbt or ridge)");
    }
    return tune(evaluator, space, opts);
}

}  // namespace wfcast
