#include "wfcast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "wfcast/util.hpp"

namespace wfcast {

namespace {

void check_paired(std::span<const double> a, std::span<const double> b, const char* who) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(who) + ": length mismatch");
    if (a.empty()) throw std::invalid_argument(std::string(who) + ": empty input");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(a[i]) || !std::isfinite(b[i]))
            throw std::invalid_argument(std::string(who) + ": non-finite value at index " +
                                        std::to_string(i));
}

bool positive_sign(double v) { return v >= 0.0; }  // sign(0) counts as +

std::optional<double> r_squared(std::span<const double> actual, std::span<const double> predicted) {
    double mean = 0.0;
    for (double v : actual) mean += v;
    mean /= static_cast<double>(actual.size());
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - predicted[i];
        const double d = actual[i] - mean;
        sse += e * e;
        sst += d * d;
    }
    if (sst == 0.0) return std::nullopt;
    return 1.0 - sse / sst;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Metrics metrics(std::span<const double> actual, std::span<const double> predicted) {
    check_paired(actual, predicted, "metrics");
    const auto n = static_cast<double>(actual.size());
    double sse = 0.0, sae = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - predicted[i];
        sse += e * e;
        sae += std::abs(e);
    }
    Metrics out;
    out.rmse = std::sqrt(sse / n);
    out.mae = sae / n;
    out.r2 = r_squared(actual, predicted);
    return out;
}

double directional_accuracy(std::span<const double> actual, std::span<const double> predicted) {
    check_paired(actual, predicted, "directional_accuracy");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < actual.size(); ++i)
        if (positive_sign(actual[i]) == positive_sign(predicted[i])) ++hits;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(actual.size());
}

DmResult dm_test(std::span<const double> errors_a, std::span<const double> errors_b,
                 bool harvey_correction) {
    check_paired(errors_a, errors_b, "dm_test");
    const std::size_t n = errors_a.size();
    if (n < 10) throw std::invalid_argument("dm_test: need at least 10 observations");

    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = errors_a[i] * errors_a[i] - errors_b[i] * errors_b[i];
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);

    DmResult out;
    out.n = n;
    if (var == 0.0) {
        out.degenerate = true;
        return out;
    }
    double stat = mean / std::sqrt(var / static_cast<double>(n));
    if (harvey_correction) {
        // h = 1: sqrt((n + 1 - 2h + h(h-1)/n) / n) = sqrt((n-1)/n)
        stat *= std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n));
    }
    out.statistic = stat;
    out.p_value = 2.0 * (1.0 - normal_cdf(std::abs(stat)));
    return out;
}

PtResult pt_test(std::span<const double> actual, std::span<const double> predicted) {
    check_paired(actual, predicted, "pt_test");
    const std::size_t n = actual.size();
    if (n < 20) throw std::invalid_argument("pt_test: need at least 20 observations");

    double py = 0.0, px = 0.0, match = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool sy = positive_sign(actual[i]);
        const bool sx = positive_sign(predicted[i]);
        py += sy ? 1.0 : 0.0;
        px += sx ? 1.0 : 0.0;
        match += (sy == sx) ? 1.0 : 0.0;
    }
    const auto dn = static_cast<double>(n);
    py /= dn;
    px /= dn;
    const double p_hat = match / dn;

    PtResult out;
    if (py == 0.0 || py == 1.0 || px == 0.0 || px == 1.0) {
        out.reason = "degenerate sign distribution (a series is single-signed)";
        return out;
    }
    const double p_star = py * px + (1.0 - py) * (1.0 - px);
    const double var_p = p_star * (1.0 - p_star) / dn;
    const double var_star = (2.0 * py - 1.0) * (2.0 * py - 1.0) * px * (1.0 - px) / dn +
                            (2.0 * px - 1.0) * (2.0 * px - 1.0) * py * (1.0 - py) / dn +
                            4.0 / (dn * dn) * py * px * (1.0 - py) * (1.0 - px);
    const double denom = var_p - var_star;
    if (!(denom > 0.0)) {
        out.reason = "non-positive variance difference";
        return out;
    }
    out.applicable = true;
    out.statistic = (p_hat - p_star) / std::sqrt(denom);
    out.p_value = 1.0 - normal_cdf(out.statistic);
    return out;
}

double binomial_sign_test(std::size_t k, std::size_t n, double p0) {
    if (k > n) throw std::invalid_argument("binomial_sign_test: k > n");
    if (!(p0 > 0.0) || !(p0 < 1.0))
        throw std::invalid_argument("binomial_sign_test: p0 must be in (0,1)");
    if (k == 0) return 1.0;

    if (n <= 50) {
        // Binomial coefficients are exact in double up to n = 50; summing them
        // keeps p-values like C(10,8..10)/2^10 exact.
        double coeff = 1.0;  // C(n, 0)
        std::vector<double> coeffs(n + 1);
        coeffs[0] = 1.0;
        for (std::size_t j = 1; j <= n; ++j) {
            coeff = coeff * static_cast<double>(n - j + 1) / static_cast<double>(j);
            coeffs[j] = coeff;
        }
        double p = 0.0;
        for (std::size_t j = n + 1; j-- > k;)
            p += coeffs[j] * std::pow(p0, static_cast<double>(j)) *
                 std::pow(1.0 - p0, static_cast<double>(n - j));
        return std::min(p, 1.0);
    }

    // Large n: log-space accumulation of the upper tail.
    const double log_p = std::log(p0), log_1p = std::log1p(-p0);
    double acc = 0.0;
    for (std::size_t j = k; j <= n; ++j) {
        const double log_pmf = std::lgamma(static_cast<double>(n) + 1.0) -
                               std::lgamma(static_cast<double>(j) + 1.0) -
                               std::lgamma(static_cast<double>(n - j) + 1.0) +
                               static_cast<double>(j) * log_p +
                               static_cast<double>(n - j) * log_1p;
        acc += std::exp(log_pmf);
    }
    return std::min(acc, 1.0);
}

BootstrapCi bootstrap_r2_ci(std::span<const double> actual, std::span<const double> predicted,
                            int resamples, std::uint64_t seed) {
    check_paired(actual, predicted, "bootstrap_r2_ci");
    const std::size_t n = actual.size();
    if (n < 30) throw std::invalid_argument("bootstrap_r2_ci: need at least 30 observations");
    if (resamples < 2) throw std::invalid_argument("bootstrap_r2_ci: need at least 2 resamples");

    std::vector<double> stats(static_cast<std::size_t>(resamples));
    std::vector<double> ra(n), rp(n);
    for (int b = 0; b < resamples; ++b) {
        // Per-resample generator derived from the master seed, so the resample
        // set is identical no matter how the loop is scheduled.
        std::mt19937_64 rng(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(b))));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::optional<double> r2;
        for (int attempt = 0; attempt < 100 && !r2; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t j = pick(rng);
                ra[i] = actual[j];
                rp[i] = predicted[j];
            }
            r2 = r_squared(ra, rp);
        }
        if (!r2)
            throw std::runtime_error(
                "bootstrap_r2_ci: zero-variance resamples persisted after 100 retries");
        stats[static_cast<std::size_t>(b)] = *r2;
    }
    std::sort(stats.begin(), stats.end());

    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(stats.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, stats.size() - 1);
        const double w = pos - std::floor(pos);
        return (1.0 - w) * stats[lo] + w * stats[hi];
    };
    BootstrapCi out;
    out.lower = quantile(0.025);
    out.upper = quantile(0.975);
    out.resamples = resamples;
    out.seed = seed;
    return out;
}

}  // namespace wfcast
