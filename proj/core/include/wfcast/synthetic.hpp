#pragma once

#include <cstdint>
#include <vector>

#include "wfcast/series.hpp"

namespace wfcast {

/// Piecewise volatility regime: sigma is multiplied by `multiplier` for
/// `length` consecutive returns; the schedule cycles.
struct RegimeSegment {
    std::size_t length = 0;
    double multiplier = 1.0;
};

/**
 * Seeded AR(1) log-return generator for desk-scale experiments:
 * r_t = phi * r_{t-1} + sigma_t * eps_t with standard-normal eps, prices by
 * cumulative exponentiation from initial_price. n counts price observations
 * (n - 1 returns). Requires |phi| < 1, sigma > 0, n >= 500.
 */
struct SyntheticSpec {
    std::size_t n = 2000;
    double ar_coeff = 0.0;
    double sigma = 0.01;
    std::vector<RegimeSegment> regimes;  // optional; empty = constant sigma
    std::uint64_t seed = 42;
    double initial_price = 1000.0;

    void validate() const;
};

PriceSeries generate_synthetic(const SyntheticSpec& spec);

}  // namespace wfcast
