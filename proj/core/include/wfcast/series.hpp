#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace wfcast {

/**
 * Ordered (date, close) observations of a single instrument.
 *
 * Dates are opaque ordered labels (trading days only, strictly increasing);
 * the library never does calendar arithmetic on them. Closes must be positive
 * and finite.
 */
struct PriceSeries {
    std::vector<std::string> dates;
    std::vector<double> closes;

    std::size_t size() const { return closes.size(); }

    /// Throws std::invalid_argument naming the offending index on any
    /// violated invariant.
    void validate() const;
};

/// Daily log-returns aligned to the later day of each consecutive price pair.
struct ReturnSeries {
    std::vector<std::string> dates;
    std::vector<double> returns;

    std::size_t size() const { return returns.size(); }
};

/// Chronological train/test boundary over n rows. The test set is the final
/// contiguous block; test_start == train_end.
struct SplitIndex {
    std::size_t train_end;
    std::size_t test_start;
    double test_fraction;

    std::size_t test_size(std::size_t n) const { return n - test_start; }
};

/// returns[t] = ln(closes[t+1] / closes[t]). Needs at least 2 prices.
ReturnSeries log_returns(const PriceSeries& prices);

/**
 * One-step-ahead price reconstruction: out[t] = prev_closes[t] * exp(r_hat[t]).
 *
 * prev_closes[t] is the realized close of the day before forecast t, never the
 * model's own prior reconstruction, so errors do not compound across steps.
 */
std::vector<double> reconstruct_prices(std::span<const double> prev_closes,
                                       std::span<const double> predicted_returns);

/// train_end = floor(n * (1 - test_fraction)), no shuffling. Requires n >= 5,
/// 0 < test_fraction < 1, and both resulting blocks non-empty.
SplitIndex chronological_split(std::size_t n, double test_fraction);

}  // namespace wfcast
