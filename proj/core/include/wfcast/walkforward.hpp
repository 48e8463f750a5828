#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "wfcast/arma.hpp"
#include "wfcast/features.hpp"
#include "wfcast/gbt.hpp"
#include "wfcast/series.hpp"
#include "wfcast/tuning.hpp"

namespace wfcast {

enum class WindowKind { kExpanding, kRolling };

struct WindowScheme {
    WindowKind kind = WindowKind::kExpanding;
    std::size_t rolling_length = 800;

    void validate() const;
    std::string name() const { return kind == WindowKind::kExpanding ? "expanding" : "rolling"; }
};

/// Training-range [start, end) for one-step-ahead step `step`; the row at
/// index `end` is the one being predicted. Expanding grows from 0; rolling
/// keeps the trailing rolling_length rows.
std::pair<std::size_t, std::size_t> window_bounds(std::size_t step, std::size_t train_end,
                                                  const WindowScheme& scheme);

/// What to refit at every step. For ARMA the design-row window is mapped to
/// the corresponding raw-return window so the benchmark sees the same
/// information set (rolling truncates to rolling_length raw returns).
struct ModelSpec {
    std::string family = "gbt";  // gbt | ridge | arma
    GbtParams gbt;
    double ridge_alpha = 1.0;
    int arma_p = 0;
    int arma_q = 0;
    bool arma_reselect = false;  // re-run the AIC order search at every step
    int arma_max_p = 5;
    int arma_max_q = 5;
    std::vector<double> raw_returns;      // arma only: full return series
    std::size_t row_return_offset = 0;    // design row i targets return i + offset
};

/// Realized closes aligned to design rows: prior is the close the day before
/// the row's target date, actual is the close on the target date.
struct AlignedPrices {
    std::vector<double> prior_closes;
    std::vector<double> actual_closes;
};

struct StepRecord {
    std::size_t step = 0;
    std::string date;
    double actual_return = 0.0;
    double predicted_return = 0.0;
    double prior_close = 0.0;
    double actual_close = 0.0;
    double reconstructed_close = 0.0;
    std::size_t window_start = 0;
    std::size_t window_end = 0;
    bool failed = false;
    std::string message;
};

struct WalkForwardResult {
    std::string model_family;
    WindowScheme scheme;
    int lag_count = 0;
    ParamMap tuned_params;
    std::size_t train_end = 0;
    std::vector<StepRecord> records;

    std::size_t failed_steps() const;
    // Aligned extracts over the non-failed records.
    std::vector<double> actual_returns() const;
    std::vector<double> predicted_returns() const;
    std::vector<double> actual_closes() const;
    std::vector<double> reconstructed_closes() const;
    std::vector<std::string> dates() const;
};

/**
 * One-step-ahead rolling-origin evaluation: for every test row, refit the
 * model on its window (hyperparameters fixed from the initial tuning),
 * predict one step, and reconstruct the price from the realized prior close.
 *
 * Steps only read realized history, so they run concurrently; records are
 * assembled by step index and a fit failure marks its step failed rather
 * than aborting the run.
 */
WalkForwardResult walk_forward_run(const DesignMatrix& design, const AlignedPrices& prices,
                                   const ModelSpec& spec, const SplitIndex& split,
                                   const WindowScheme& scheme, int threads = 1);

}  // namespace wfcast
