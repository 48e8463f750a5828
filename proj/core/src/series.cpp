#include "wfcast/series.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace wfcast {

void PriceSeries::validate() const {
    if (dates.size() != closes.size())
        throw std::invalid_argument("PriceSeries: dates/closes length mismatch (" +
                                    std::to_string(dates.size()) + " vs " +
                                    std::to_string(closes.size()) + ")");
    for (std::size_t i = 0; i < closes.size(); ++i) {
        if (!std::isfinite(closes[i]) || closes[i] <= 0.0)
            throw std::invalid_argument("PriceSeries: non-positive or non-finite close at index " +
                                        std::to_string(i));
        if (i > 0 && !(dates[i - 1] < dates[i]))
            throw std::invalid_argument("PriceSeries: dates not strictly increasing at index " +
                                        std::to_string(i) + " (" + dates[i - 1] + " -> " + dates[i] + ")");
    }
}

ReturnSeries log_returns(const PriceSeries& prices) {
    prices.validate();
    if (prices.size() < 2)
        throw std::invalid_argument("log_returns: need at least 2 prices, got " +
                                    std::to_string(prices.size()));
    ReturnSeries out;
    out.returns.resize(prices.size() - 1);
    out.dates.assign(prices.dates.begin() + 1, prices.dates.end());
    for (std::size_t t = 0; t + 1 < prices.size(); ++t)
        out.returns[t] = std::log(prices.closes[t + 1] / prices.closes[t]);
    return out;
}

std::vector<double> reconstruct_prices(std::span<const double> prev_closes,
                                       std::span<const double> predicted_returns) {
    if (prev_closes.size() != predicted_returns.size())
        throw std::invalid_argument("reconstruct_prices: length mismatch (" +
                                    std::to_string(prev_closes.size()) + " vs " +
                                    std::to_string(predicted_returns.size()) + ")");
    std::vector<double> out(prev_closes.size());
    for (std::size_t t = 0; t < out.size(); ++t) {
        if (!std::isfinite(prev_closes[t]) || !std::isfinite(predicted_returns[t]))
            throw std::invalid_argument("reconstruct_prices: non-finite input at index " +
                                        std::to_string(t));
        out[t] = prev_closes[t] * std::exp(predicted_returns[t]);
    }
    return out;
}

SplitIndex chronological_split(std::size_t n, double test_fraction) {
    if (n < 5)
        throw std::invalid_argument("chronological_split: need at least 5 rows, got " +
                                    std::to_string(n));
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
        throw std::invalid_argument("chronological_split: test_fraction must be in (0,1)");
    auto train_end = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - test_fraction)));
    if (train_end < 1 || train_end >= n)
        throw std::invalid_argument("chronological_split: degenerate split for n=" +
                                    std::to_string(n) + ", test_fraction=" +
                                    std::to_string(test_fraction));
    return SplitIndex{train_end, train_end, test_fraction};
}

}  // namespace wfcast
