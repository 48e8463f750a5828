#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wfcast/features.hpp"
#include "wfcast/gbt.hpp"

namespace wfcast {

enum class ParamScale { kLinear, kLog, kInteger };

struct ParamDef {
    std::string name;
    double lower = 0.0;
    double upper = 0.0;
    ParamScale scale = ParamScale::kLinear;
};

struct SearchSpace {
    std::vector<ParamDef> params;

    void validate() const;
    const ParamDef* find(const std::string& name) const;

    /// The boosted-tree benchmark ranges: estimators 200-1200, depth 3-10,
    /// learning rate 0.01-0.3 (log), subsample/colsample 0.6-1.0, gamma 0-5,
    /// min_child_weight 1-10, reg_alpha 0-1, reg_lambda 0-2.
    static SearchSpace gbt_default();
    /// Single log-scaled ridge alpha in [1e-4, 1e3].
    static SearchSpace ridge_default();
};

using ParamMap = std::map<std::string, double>;

struct Trial {
    int index = -1;
    ParamMap params;
    std::vector<double> fold_scores;
    double cv_score = 0.0;  // mean of fold_scores; meaningless when failed
    bool failed = false;
    std::uint64_t seed = 0;
};

/// One walk of the time-series CV: train on [0, train_end), validate on
/// [val_begin, val_end); validation always lies strictly after training.
struct CvFold {
    std::size_t train_end = 0;
    std::size_t val_begin = 0;
    std::size_t val_end = 0;
};

/// Partitions n rows into k+1 contiguous chunks (remainder joins the first);
/// fold i trains on chunks 0..i and validates on chunk i+1. Requires
/// n >= 2(k+1).
std::vector<CvFold> ts_cv_splits(std::size_t n, int k = 5);

struct TuneOptions {
    int trials = 60;
    int cv_folds = 5;
    std::uint64_t seed = 42;
    bool use_tpe = true;  // false = plain random search, kept for ablations
    int warmup_trials = 10;
    double good_quantile = 0.25;
    int tpe_candidates = 24;
    int threads = 1;  // fold-parallel evaluation; result independent of it
};

/// Midpoint of every parameter range (geometric midpoint on log scale);
/// evaluated as trial 0 so the returned optimum always dominates a sane
/// default configuration.
ParamMap default_params(const SearchSpace& space);

/**
 * Draws the next parameter set. With fewer than warmup_trials usable trials
 * the draw is uniform (log-uniform on log-scaled axes). Afterwards each
 * parameter is sampled by an independent univariate TPE step: the history is
 * split at the good_quantile of cv_score, both sides get a Gaussian kernel
 * density over their observed values, candidates come from the good density
 * and the one with the best good/bad density ratio wins. Integer parameters
 * are rounded; every output respects the bounds.
 */
ParamMap suggest_params(const SearchSpace& space, const std::vector<Trial>& history,
                        std::uint64_t seed, const TuneOptions& opts = {});

/// Per-trial objective: fold RMSE scores, or nullopt when some fold's model
/// fit failed (such trials are logged but excluded from the argmin).
using TrialEvaluator = std::function<std::optional<std::vector<double>>(const ParamMap&)>;

struct TuneResult {
    ParamMap best_params;
    int best_trial = -1;
    std::vector<Trial> trials;
};

/// Generic driver: trial 0 evaluates default_params, then suggest_params
/// drives the rest. Deterministic for a fixed seed.
TuneResult tune(const TrialEvaluator& evaluator, const SearchSpace& space,
                const TuneOptions& opts);

/// Family driver over the initial training block of a design matrix
/// (family is "gbt" or "ridge"); scores are validation-fold RMSEs.
TuneResult tune_family(const std::string& family, const DesignMatrix& design,
                       std::size_t train_rows, const SearchSpace& space, const TuneOptions& opts,
                       const GbtParams& gbt_base = {});

/// Materializes a ParamMap produced by the GBT search space onto base params.
GbtParams apply_gbt_params(GbtParams base, const ParamMap& params);

}  // namespace wfcast
