#pragma once

#include <span>
#include <string>
#include <vector>

namespace wfcast {

struct ArmaFitOptions {
    int max_simplex_iterations = 2000;
    double simplex_tolerance = 1e-12;
    // Observations treated as presample (residual sum starts after them);
    // -1 means p. The order search pins this to max_p for every candidate so
    // their AICs are computed over the same sample and stay comparable.
    int condition_on = -1;
};

/**
 * ARMA(p, q) with constant, fitted by conditional sum of squares: the
 * Gaussian likelihood conditioned on the first p observations, with presample
 * innovations set to zero. q = 0 is solved exactly by least squares; q > 0 by
 * Nelder-Mead simplex from the least-squares AR warm start.
 *
 * AIC uses the effective sample n_eff = n - p:
 * AIC = n_eff * ln(SSE / n_eff) + 2 (p + q + 1).
 */
struct ArmaModel {
    int p = 0;
    int q = 0;
    double constant = 0.0;
    std::vector<double> ar_coeffs;
    std::vector<double> ma_coeffs;
    double sigma2 = 0.0;
    double aic = 0.0;
    bool converged = true;
    // Fit context for one-step forecasting, oldest first.
    std::vector<double> tail_returns;
    std::vector<double> tail_residuals;
};

struct AdfResult {
    double statistic = 0.0;
    int lags = 0;
    std::string p_band;  // "<0.01", "<0.05", "<0.10" or ">=0.10"
    double cv_1pct = 0.0;
    double cv_5pct = 0.0;
    double cv_10pct = 0.0;
};

/// Requires series length >= 10 * (p + q + 1). Non-convergence of the simplex
/// is flagged on the model, not thrown.
ArmaModel fit_arma(std::span<const double> returns, int p, int q, const ArmaFitOptions& opts = {});

/// Fits every (p, q) in [0, max_p] x [0, max_q] and returns the minimum-AIC
/// converged model; ties break toward smaller p+q, then smaller p. Orders the
/// series is too short for are skipped.
ArmaModel aic_order_search(std::span<const double> returns, int max_p = 5, int max_q = 5,
                           const ArmaFitOptions& opts = {}, int threads = 1);

/**
 * Augmented Dickey-Fuller unit-root test, constant-only regression, with
 * the Schwert lag rule floor(12 * (n/100)^0.25). The statistic is compared
 * against MacKinnon response-surface critical values; only a p-band is
 * reported. Requires length >= 25.
 */
AdfResult adf_test(std::span<const double> series);

/// c + sum(ar_i * r_{end-i}) + sum(ma_j * e_{end-j}) from the stored fit tail.
double forecast_one_step(const ArmaModel& model);

}  // namespace wfcast
