#include "wfcast/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace wfcast {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void FeatureSpec::validate() const {
    if (lag_count < 1)
        throw std::invalid_argument("FeatureSpec: lag_count must be >= 1");
    if (vol_windows.empty())
        throw std::invalid_argument("FeatureSpec: need at least one volatility window");
    for (int w : vol_windows)
        if (w < 2) throw std::invalid_argument("FeatureSpec: volatility windows must be >= 2");
    if (mean_window < 2)
        throw std::invalid_argument("FeatureSpec: mean_window must be >= 2");
    if (rsi_period < 1)
        throw std::invalid_argument("FeatureSpec: rsi_period must be >= 1");
    if (!(rsi_epsilon > 0.0))
        throw std::invalid_argument("FeatureSpec: rsi_epsilon must be > 0");
}

int FeatureSpec::warmup_rows() const {
    // Indicators are shifted one step at assembly, so a window-w indicator is
    // first defined at target row w; lag_k is first defined at row k.
    int warmup = lag_count;
    for (int w : vol_windows) warmup = std::max(warmup, w);
    warmup = std::max(warmup, rsi_period);
    warmup = std::max(warmup, mean_window);
    return warmup;
}

std::vector<std::vector<double>> make_lags(const ReturnSeries& returns, int lag_count) {
    if (lag_count < 1)
        throw std::invalid_argument("make_lags: lag_count must be >= 1");
    const std::size_t n = returns.size();
    if (static_cast<std::size_t>(lag_count) >= n)
        throw std::invalid_argument("make_lags: lag_count " + std::to_string(lag_count) +
                                    " >= series length " + std::to_string(n));
    std::vector<std::vector<double>> columns(static_cast<std::size_t>(lag_count),
                                             std::vector<double>(n, kNaN));
    for (int k = 1; k <= lag_count; ++k) {
        auto& col = columns[static_cast<std::size_t>(k - 1)];
        for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t)
            col[t] = returns.returns[t - static_cast<std::size_t>(k)];
    }
    return columns;
}

std::vector<double> rolling_std(std::span<const double> values, int window) {
    if (window < 2)
        throw std::invalid_argument("rolling_std: window must be >= 2");
    if (static_cast<std::size_t>(window) > values.size())
        throw std::invalid_argument("rolling_std: window " + std::to_string(window) +
                                    " larger than series length " + std::to_string(values.size()));
    std::vector<double> out(values.size(), kNaN);
    const std::size_t w = static_cast<std::size_t>(window);
    for (std::size_t t = w - 1; t < values.size(); ++t) {
        double sum = 0.0;
        for (std::size_t i = t + 1 - w; i <= t; ++i) sum += values[i];
        const double mean = sum / static_cast<double>(w);
        double ss = 0.0;
        for (std::size_t i = t + 1 - w; i <= t; ++i) {
            const double d = values[i] - mean;
            ss += d * d;
        }
        out[t] = std::sqrt(ss / static_cast<double>(w - 1));
    }
    return out;
}

std::vector<double> rolling_mean(std::span<const double> values, int window) {
    if (window < 1)
        throw std::invalid_argument("rolling_mean: window must be >= 1");
    if (static_cast<std::size_t>(window) > values.size())
        throw std::invalid_argument("rolling_mean: window " + std::to_string(window) +
                                    " larger than series length " + std::to_string(values.size()));
    std::vector<double> out(values.size(), kNaN);
    const std::size_t w = static_cast<std::size_t>(window);
    for (std::size_t t = w - 1; t < values.size(); ++t) {
        double sum = 0.0;
        for (std::size_t i = t + 1 - w; i <= t; ++i) sum += values[i];
        out[t] = sum / static_cast<double>(w);
    }
    return out;
}

std::vector<double> rsi(std::span<const double> returns, int period, double epsilon) {
    if (period < 1)
        throw std::invalid_argument("rsi: period must be >= 1");
    if (static_cast<std::size_t>(period) > returns.size())
        throw std::invalid_argument("rsi: period " + std::to_string(period) +
                                    " larger than series length " + std::to_string(returns.size()));
    std::vector<double> out(returns.size(), kNaN);
    const std::size_t w = static_cast<std::size_t>(period);
    for (std::size_t t = w - 1; t < returns.size(); ++t) {
        double gain = 0.0, loss = 0.0;
        for (std::size_t i = t + 1 - w; i <= t; ++i) {
            if (returns[i] > 0.0)
                gain += returns[i];
            else
                loss -= returns[i];
        }
        const double rs = (gain / static_cast<double>(w)) / (loss / static_cast<double>(w) + epsilon);
        out[t] = 100.0 - 100.0 / (1.0 + rs);
    }
    return out;
}

DesignMatrix assemble_design_matrix(const ReturnSeries& returns, const FeatureSpec& spec) {
    spec.validate();
    const std::size_t n = returns.size();
    const int warmup = spec.warmup_rows();
    if (n <= static_cast<std::size_t>(warmup))
        throw std::invalid_argument("assemble_design_matrix: series too short; need more than " +
                                    std::to_string(warmup) + " returns, got " + std::to_string(n));

    auto lag_cols = make_lags(returns, spec.lag_count);

    // Raw indicator columns use the window ending at each index; the design
    // row for target t reads them at t-1 so no feature sees the target day.
    std::vector<std::vector<double>> indicator_cols;
    std::vector<std::string> indicator_names;
    for (int w : spec.vol_windows) {
        indicator_cols.push_back(rolling_std(returns.returns, w));
        indicator_names.push_back("vol_" + std::to_string(w));
    }
    indicator_cols.push_back(rsi(returns.returns, spec.rsi_period, spec.rsi_epsilon));
    indicator_names.push_back("rsi_" + std::to_string(spec.rsi_period));
    indicator_cols.push_back(rolling_mean(returns.returns, spec.mean_window));
    indicator_names.push_back("mean_" + std::to_string(spec.mean_window));

    DesignMatrix out;
    for (int k = 1; k <= spec.lag_count; ++k) out.feature_names.push_back("lag_" + std::to_string(k));
    for (const auto& name : indicator_names) out.feature_names.push_back(name);

    const std::size_t n_cols = out.feature_names.size();
    std::vector<double> row(n_cols);
    for (std::size_t t = static_cast<std::size_t>(warmup); t < n; ++t) {
        bool complete = std::isfinite(returns.returns[t]);
        std::size_t c = 0;
        for (const auto& col : lag_cols) row[c++] = col[t];
        for (const auto& col : indicator_cols) row[c++] = col[t - 1];
        for (std::size_t j = 0; j < n_cols && complete; ++j) complete = std::isfinite(row[j]);
        if (!complete) continue;
        out.rows.push_back(row);
        out.targets.push_back(returns.returns[t]);
        out.row_dates.push_back(returns.dates[t]);
    }
    if (out.rows.empty())
        throw std::invalid_argument("assemble_design_matrix: no complete rows survived");
    return out;
}

}  // namespace wfcast
