#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wfcast/series.hpp"

namespace wfcast {

/// Feature-engineering configuration. Defaults match the benchmark setup:
/// lagged returns plus vol_5, vol_20, rsi_14 and mean_10.
struct FeatureSpec {
    int lag_count = 20;
    std::vector<int> vol_windows = {5, 20};
    int mean_window = 10;
    int rsi_period = 14;
    double rsi_epsilon = 1e-8;

    void validate() const;

    /// Warm-up rows lost at the head of the return series: the longest
    /// one-sided history any feature needs before the target observation.
    int warmup_rows() const;
};

/**
 * Supervised design matrix over a return series.
 *
 * Row t carries the features available strictly before target date t:
 * lag_k = r_{t-k}, and each indicator computed from returns up to t-1.
 * Incomplete warm-up rows are dropped, so every retained cell is finite.
 * Column order is fixed: lag_1..lag_L, vol_*, rsi_*, mean_*.
 */
struct DesignMatrix {
    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    std::vector<std::string> feature_names;
    std::vector<std::string> row_dates;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return feature_names.size(); }
};

/// Lag columns over the return series: column k-1 holds r_{t-k} at index t,
/// NaN for the first k rows. Requires 1 <= L < returns.size().
std::vector<std::vector<double>> make_lags(const ReturnSeries& returns, int lag_count);

/// Trailing sample standard deviation (n-1 divisor) over `window` values
/// ending at each index; NaN for the first window-1 indices.
std::vector<double> rolling_std(std::span<const double> values, int window);

/// Trailing arithmetic mean; NaN for the first window-1 indices.
std::vector<double> rolling_mean(std::span<const double> values, int window);

/**
 * Relative Strength Index over trailing `period` returns ending at each index.
 *
 * RS = mean(gains) / (mean(losses) + epsilon), RSI = 100 - 100/(1+RS), with
 * gains = max(r, 0) and losses = max(-r, 0). Output lies in [0, 100]; NaN for
 * the first period-1 indices.
 */
std::vector<double> rsi(std::span<const double> returns, int period = 14, double epsilon = 1e-8);

/// Joins lag and indicator columns (indicators shifted one step so row t sees
/// only returns through t-1), drops incomplete rows, records target r_t.
DesignMatrix assemble_design_matrix(const ReturnSeries& returns, const FeatureSpec& spec);

}  // namespace wfcast
