#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace wfcast {

struct Metrics {
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> r2;  // empty when the actuals have zero variance
};

/// Textbook RMSE / MAE / R-squared; R-squared may be negative.
Metrics metrics(std::span<const double> actual, std::span<const double> predicted);

/// Percent of sign matches, with sign(0) counted as positive.
double directional_accuracy(std::span<const double> actual, std::span<const double> predicted);

/**
 * Diebold-Mariano test of equal predictive accuracy under squared-error loss
 * at horizon 1: the loss differential's long-run variance is its lag-0
 * autocovariance (population divisor). The Harvey small-sample correction is
 * applied by default. Two-sided normal p-value.
 *
 * A zero-variance differential (e.g. identical error series) is reported as
 * degenerate rather than as a statistic.
 */
struct DmResult {
    bool degenerate = false;
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};
DmResult dm_test(std::span<const double> errors_a, std::span<const double> errors_b,
                 bool harvey_correction = true);

/**
 * Pesaran-Timmermann test of non-random directional predictability.
 * One-sided normal p-value. Inapplicable when either series is single-signed
 * (the independence variance vanishes); `applicable` is false and `reason`
 * says why.
 */
struct PtResult {
    bool applicable = false;
    std::string reason;
    double statistic = 0.0;
    double p_value = 1.0;
};
PtResult pt_test(std::span<const double> actual, std::span<const double> predicted);

/// Exact one-sided upper-tail binomial p-value P(X >= k), X ~ Bin(n, p0).
double binomial_sign_test(std::size_t k, std::size_t n, double p0 = 0.5);

/**
 * Percentile bootstrap CI for out-of-sample R-squared: i.i.d. paired
 * resampling, 2.5/97.5 percentile bounds, deterministic for a fixed seed.
 * Zero-variance resamples are redrawn (bounded retries).
 */
struct BootstrapCi {
    double lower = 0.0;
    double upper = 0.0;
    int resamples = 0;
    std::uint64_t seed = 0;
};
BootstrapCi bootstrap_r2_ci(std::span<const double> actual, std::span<const double> predicted,
                            int resamples = 1000, std::uint64_t seed = 42);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace wfcast
