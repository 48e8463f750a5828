#include "wfcast/arma.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "wfcast/parallel.hpp"

namespace wfcast {

namespace {

// Conditional sum of squares for parameters [c, phi_1..p, theta_1..q];
// residuals before index `start` are treated as zero. Optionally exposes the
// residual sequence (aligned to the series, zeros in the presample).
double css_sse(std::span<const double> y, int p, int q, int start, const Eigen::VectorXd& params,
               std::vector<double>* residuals = nullptr) {
    const auto n = static_cast<std::ptrdiff_t>(y.size());
    const double c = params(0);
    std::vector<double> eps;
    eps.assign(static_cast<std::size_t>(n), 0.0);
    double sse = 0.0;
    for (std::ptrdiff_t t = start; t < n; ++t) {
        double m = c;
        for (int i = 1; i <= p; ++i) m += params(i) * y[static_cast<std::size_t>(t - i)];
        for (int j = 1; j <= q; ++j) {
            const std::ptrdiff_t s = t - j;
            if (s >= start) m += params(p + j) * eps[static_cast<std::size_t>(s)];
        }
        const double e = y[static_cast<std::size_t>(t)] - m;
        eps[static_cast<std::size_t>(t)] = e;
        sse += e * e;
    }
    if (residuals) *residuals = std::move(eps);
    return sse;
}

// Least-squares AR(p) with constant over t = start..n-1: exact CSS solution
// when q = 0 and the warm start otherwise.
Eigen::VectorXd ar_least_squares(std::span<const double> y, int p, int start) {
    const auto n = static_cast<Eigen::Index>(y.size());
    const Eigen::Index rows = n - start;
    Eigen::MatrixXd X(rows, p + 1);
    Eigen::VectorXd b(rows);
    for (Eigen::Index t = 0; t < rows; ++t) {
        X(t, 0) = 1.0;
        for (int i = 1; i <= p; ++i)
            X(t, i) = y[static_cast<std::size_t>(t + start - i)];
        b(t) = y[static_cast<std::size_t>(t + start)];
    }
    return X.colPivHouseholderQr().solve(b);
}

struct SimplexResult {
    Eigen::VectorXd x;
    double value;
    bool converged;
};

// Standard Nelder-Mead on an unconstrained objective. Deterministic: the
// initial simplex and all operations are functions of the start point only.
template <typename F>
SimplexResult nelder_mead(const F& f, const Eigen::VectorXd& start, int max_iterations,
                          double tolerance) {
    const auto dim = start.size();
    std::vector<Eigen::VectorXd> pts;
    std::vector<double> vals;
    pts.push_back(start);
    for (Eigen::Index i = 0; i < dim; ++i) {
        Eigen::VectorXd v = start;
        const double step = std::max(0.05, 0.1 * std::abs(v(i)));
        v(i) += step;
        pts.push_back(v);
    }
    for (const auto& v : pts) vals.push_back(f(v));

    std::vector<std::size_t> order(pts.size());
    auto sort_simplex = [&] {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    };

    bool converged = false;
    for (int iter = 0; iter < max_iterations; ++iter) {
        sort_simplex();
        const double best = vals[order.front()];
        const double worst = vals[order.back()];
        if (worst - best <= tolerance * (std::abs(best) + tolerance)) {
            converged = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += pts[order[i]];
        centroid /= static_cast<double>(dim);

        const std::size_t iw = order.back();
        const Eigen::VectorXd reflected = centroid + (centroid - pts[iw]);
        const double fr = f(reflected);
        if (fr < vals[order.front()]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[iw]);
            const double fe = f(expanded);
            if (fe < fr) {
                pts[iw] = expanded;
                vals[iw] = fe;
            } else {
                pts[iw] = reflected;
                vals[iw] = fr;
            }
        } else if (fr < vals[order[order.size() - 2]]) {
            pts[iw] = reflected;
            vals[iw] = fr;
        } else {
            const Eigen::VectorXd contracted = centroid + 0.5 * (pts[iw] - centroid);
            const double fc = f(contracted);
            if (fc < vals[iw]) {
                pts[iw] = contracted;
                vals[iw] = fc;
            } else {
                const auto ib = order.front();
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    if (i == ib) continue;
                    pts[i] = pts[ib] + 0.5 * (pts[i] - pts[ib]);
                    vals[i] = f(pts[i]);
                }
            }
        }
    }
    sort_simplex();
    return SimplexResult{pts[order.front()], vals[order.front()], converged};
}

}  // namespace

ArmaModel fit_arma(std::span<const double> returns, int p, int q, const ArmaFitOptions& opts) {
    if (p < 0 || q < 0) throw std::invalid_argument("fit_arma: orders must be >= 0");
    const int start = std::max(p, opts.condition_on);
    const std::size_t min_len =
        std::max(10 * static_cast<std::size_t>(p + q + 1), static_cast<std::size_t>(start) + 10);
    if (returns.size() < min_len)
        throw std::invalid_argument("fit_arma: series length " + std::to_string(returns.size()) +
                                    " below required " + std::to_string(min_len) + " for (p,q)=(" +
                                    std::to_string(p) + "," + std::to_string(q) + ")");
    for (double v : returns)
        if (!std::isfinite(v)) throw std::invalid_argument("fit_arma: non-finite observation");

    Eigen::VectorXd params = Eigen::VectorXd::Zero(1 + p + q);
    params.head(1 + p) = ar_least_squares(returns, p, start);

    bool converged = true;
    if (q > 0) {
        auto objective = [&](const Eigen::VectorXd& v) { return css_sse(returns, p, q, start, v); };
        auto res = nelder_mead(objective, params, opts.max_simplex_iterations,
                               opts.simplex_tolerance);
        params = res.x;
        converged = res.converged;
    }

    std::vector<double> residuals;
    const double sse = css_sse(returns, p, q, start, params, &residuals);
    const auto n_eff = static_cast<double>(returns.size() - static_cast<std::size_t>(start));

    ArmaModel model;
    model.p = p;
    model.q = q;
    model.constant = params(0);
    model.ar_coeffs.assign(params.data() + 1, params.data() + 1 + p);
    model.ma_coeffs.assign(params.data() + 1 + p, params.data() + 1 + p + q);
    model.sigma2 = std::max(sse / n_eff, std::numeric_limits<double>::min());
    model.aic = n_eff * std::log(model.sigma2) + 2.0 * static_cast<double>(p + q + 1);
    model.converged = converged;
    model.tail_returns.assign(returns.end() - p, returns.end());
    model.tail_residuals.assign(residuals.end() - q, residuals.end());
    return model;
}

ArmaModel aic_order_search(std::span<const double> returns, int max_p, int max_q,
                           const ArmaFitOptions& opts, int threads) {
    if (max_p < 0 || max_q < 0)
        throw std::invalid_argument("aic_order_search: bounds must be >= 0");
    std::vector<std::pair<int, int>> orders;
    for (int p = 0; p <= max_p; ++p)
        for (int q = 0; q <= max_q; ++q) orders.emplace_back(p, q);

    // Condition every candidate on the same presample so their AICs are
    // computed over identical samples.
    ArmaFitOptions search_opts = opts;
    search_opts.condition_on = std::max(search_opts.condition_on, max_p);

    std::vector<std::optional<ArmaModel>> fits(orders.size());
    parallel_for(orders.size(), threads, [&](std::size_t i) {
        try {
            auto m = fit_arma(returns, orders[i].first, orders[i].second, search_opts);
            if (m.converged) fits[i] = std::move(m);
        } catch (const std::invalid_argument&) {
            // order infeasible for this series length; skipped
        }
    });

    // Deterministic merge in (p, q) order; ties prefer smaller p+q, then p.
    std::optional<ArmaModel> best;
    for (const auto& fit : fits) {
        if (!fit) continue;
        if (!best || fit->aic < best->aic ||
            (fit->aic == best->aic &&
             (fit->p + fit->q < best->p + best->q ||
              (fit->p + fit->q == best->p + best->q && fit->p < best->p))))
            best = *fit;
    }
    if (!best) throw std::runtime_error("aic_order_search: all candidate fits failed");
    return *best;
}

AdfResult adf_test(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 25) throw std::invalid_argument("adf_test: need at least 25 observations");
    const int k = static_cast<int>(
        std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));

    std::vector<double> dy(n - 1);
    for (std::size_t t = 1; t < n; ++t) dy[t - 1] = series[t] - series[t - 1];

    // Regression of dy[t] on [1, y[t-1], dy[t-1..t-k]] for t = k+1 .. n-1.
    // The non-constant regressors are demeaned, which leaves slopes and their
    // standard errors untouched but keeps the normal equations conditioned
    // when the series level dwarfs its increments.
    const auto rows = static_cast<Eigen::Index>(n - 1 - static_cast<std::size_t>(k));
    const Eigen::Index cols = 2 + k;
    if (rows <= cols)
        throw std::invalid_argument("adf_test: series too short for the Schwert lag order");
    Eigen::MatrixXd X(rows, cols);
    Eigen::VectorXd b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t t = static_cast<std::size_t>(r) + static_cast<std::size_t>(k) + 1;
        X(r, 0) = 1.0;
        X(r, 1) = series[t - 1];
        for (int i = 1; i <= k; ++i) X(r, 1 + i) = dy[t - 1 - static_cast<std::size_t>(i)];
        b(r) = dy[t - 1];
    }
    for (Eigen::Index c = 1; c < cols; ++c) X.col(c).array() -= X.col(c).mean();
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(b);
    const Eigen::VectorXd resid = b - X * beta;
    const double sigma2 = resid.squaredNorm() / static_cast<double>(rows - cols);
    const Eigen::MatrixXd cov =
        sigma2 * (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(cols, cols));
    const double se = std::sqrt(cov(1, 1));

    AdfResult out;
    out.statistic = beta(1) / se;
    out.lags = k;

    // MacKinnon (2010) response-surface critical values, constant-only case.
    const double T = static_cast<double>(rows);
    auto surface = [T](double b0, double b1, double b2, double b3) {
        return b0 + b1 / T + b2 / (T * T) + b3 / (T * T * T);
    };
    out.cv_1pct = surface(-3.43035, -6.5393, -16.786, -79.433);
    out.cv_5pct = surface(-2.86154, -2.8903, -4.234, -40.040);
    out.cv_10pct = surface(-2.56677, -1.5384, -2.809, 0.0);
    if (out.statistic <= out.cv_1pct)
        out.p_band = "<0.01";
    else if (out.statistic <= out.cv_5pct)
        out.p_band = "<0.05";
    else if (out.statistic <= out.cv_10pct)
        out.p_band = "<0.10";
    else
        out.p_band = ">=0.10";
    return out;
}

double forecast_one_step(const ArmaModel& model) {
    if (model.tail_returns.size() != static_cast<std::size_t>(model.p) ||
        model.tail_residuals.size() != static_cast<std::size_t>(model.q))
        throw std::invalid_argument("arma forecast: missing fit context");
    double acc = model.constant;
    for (int i = 1; i <= model.p; ++i)
        acc += model.ar_coeffs[static_cast<std::size_t>(i - 1)] *
               model.tail_returns[model.tail_returns.size() - static_cast<std::size_t>(i)];
    for (int j = 1; j <= model.q; ++j)
        acc += model.ma_coeffs[static_cast<std::size_t>(j - 1)] *
               model.tail_residuals[model.tail_residuals.size() - static_cast<std::size_t>(j)];
    return acc;
}

}  // namespace wfcast
