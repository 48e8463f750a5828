#include "wfcast/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace wfcast {

void SyntheticSpec::validate() const {
    if (n < 500) throw std::invalid_argument("SyntheticSpec: n must be >= 500");
    if (!(std::abs(ar_coeff) < 1.0))
        throw std::invalid_argument("SyntheticSpec: |ar_coeff| must be < 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("SyntheticSpec: sigma must be > 0");
    if (!(initial_price > 0.0))
        throw std::invalid_argument("SyntheticSpec: initial_price must be > 0");
    for (const auto& seg : regimes) {
        if (seg.length == 0)
            throw std::invalid_argument("SyntheticSpec: regime segments need length > 0");
        if (!(seg.multiplier > 0.0))
            throw std::invalid_argument("SyntheticSpec: regime multipliers must be > 0");
    }
}

PriceSeries generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // sigma_t follows the cyclic regime schedule (constant when empty).
    std::size_t seg_idx = 0, seg_pos = 0;
    auto sigma_at = [&]() {
        if (spec.regimes.empty()) return spec.sigma;
        const auto& seg = spec.regimes[seg_idx];
        const double s = spec.sigma * seg.multiplier;
        if (++seg_pos >= seg.length) {
            seg_pos = 0;
            seg_idx = (seg_idx + 1) % spec.regimes.size();
        }
        return s;
    };

    const std::size_t n_returns = spec.n - 1;
    std::vector<double> returns(n_returns);
    double prev = 0.0;
    for (std::size_t t = 0; t < n_returns; ++t) {
        prev = spec.ar_coeff * prev + sigma_at() * gauss(rng);
        returns[t] = prev;
    }

    PriceSeries series;
    series.dates.resize(spec.n);
    series.closes.resize(spec.n);
    series.closes[0] = spec.initial_price;
    for (std::size_t t = 0; t < spec.n; ++t) {
        // Pseudo-calendar: a monotone injective encoding into valid ISO
        // labels (12 months of 31 days), so synthetic exports survive ingest.
        const std::size_t year = 2000 + t / 372;
        const std::size_t month = 1 + (t % 372) / 31;
        const std::size_t day = 1 + t % 31;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04zu-%02zu-%02zu", year, month, day);
        series.dates[t] = buf;
        if (t > 0) series.closes[t] = series.closes[t - 1] * std::exp(returns[t - 1]);
    }
    series.validate();
    return series;
}

}  // namespace wfcast
