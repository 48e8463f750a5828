#include "wfcast/walkforward.hpp"

#include <cmath>
#include <stdexcept>

#include "wfcast/parallel.hpp"
#include "wfcast/ridge.hpp"

namespace wfcast {

void WindowScheme::validate() const {
    if (kind == WindowKind::kRolling && rolling_length < 50)
        throw std::invalid_argument("WindowScheme: rolling_length must be >= 50");
}

std::pair<std::size_t, std::size_t> window_bounds(std::size_t step, std::size_t train_end,
                                                  const WindowScheme& scheme) {
    const std::size_t end = train_end + step;
    if (scheme.kind == WindowKind::kExpanding) return {0, end};
    const std::size_t start = end > scheme.rolling_length ? end - scheme.rolling_length : 0;
    return {start, end};
}

std::size_t WalkForwardResult::failed_steps() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.failed ? 1 : 0;
    return n;
}

namespace {
template <typename T, typename F>
std::vector<T> extract(const std::vector<StepRecord>& records, F&& get) {
    std::vector<T> out;
    out.reserve(records.size());
    for (const auto& r : records)
        if (!r.failed) out.push_back(get(r));
    return out;
}
}  // namespace

std::vector<double> WalkForwardResult::actual_returns() const {
    return extract<double>(records, [](const StepRecord& r) { return r.actual_return; });
}
std::vector<double> WalkForwardResult::predicted_returns() const {
    return extract<double>(records, [](const StepRecord& r) { return r.predicted_return; });
}
std::vector<double> WalkForwardResult::actual_closes() const {
    return extract<double>(records, [](const StepRecord& r) { return r.actual_close; });
}
std::vector<double> WalkForwardResult::reconstructed_closes() const {
    return extract<double>(records, [](const StepRecord& r) { return r.reconstructed_close; });
}
std::vector<std::string> WalkForwardResult::dates() const {
    return extract<std::string>(records, [](const StepRecord& r) { return r.date; });
}

WalkForwardResult walk_forward_run(const DesignMatrix& design, const AlignedPrices& prices,
                                   const ModelSpec& spec, const SplitIndex& split,
                                   const WindowScheme& scheme, int threads) {
    scheme.validate();
    const std::size_t n = design.n_rows();
    if (prices.prior_closes.size() != n || prices.actual_closes.size() != n)
        throw std::invalid_argument("walk_forward_run: aligned prices do not match design rows");
    if (split.train_end >= n)
        throw std::invalid_argument("walk_forward_run: empty test block");
    const bool is_arma = spec.family == "arma";
    if (!is_arma && spec.family != "gbt" && spec.family != "ridge")
        throw std::invalid_argument("walk_forward_run: unknown model family " + spec.family);
    if (is_arma && spec.raw_returns.size() < spec.row_return_offset + n)
        throw std::invalid_argument("walk_forward_run: raw returns shorter than design alignment");

    WalkForwardResult result;
    result.model_family = spec.family;
    result.scheme = scheme;
    result.train_end = split.train_end;
    result.records.resize(n - split.train_end);

    auto run_step = [&](std::size_t s) {
        auto& rec = result.records[s];
        const auto [start, end] = window_bounds(s, split.train_end, scheme);
        rec.step = s;
        rec.window_start = start;
        rec.window_end = end;
        rec.date = design.row_dates[end];
        rec.actual_return = design.targets[end];
        rec.prior_close = prices.prior_closes[end];
        rec.actual_close = prices.actual_closes[end];
        try {
            double prediction = 0.0;
            if (spec.family == "gbt") {
                std::vector<std::vector<double>> train_rows(
                    design.rows.begin() + static_cast<std::ptrdiff_t>(start),
                    design.rows.begin() + static_cast<std::ptrdiff_t>(end));
                std::vector<double> train_y(
                    design.targets.begin() + static_cast<std::ptrdiff_t>(start),
                    design.targets.begin() + static_cast<std::ptrdiff_t>(end));
                const auto model = fit_gbt(train_rows, train_y, spec.gbt, design.feature_names);
                prediction = model.predict_row(design.rows[end]);
            } else if (spec.family == "ridge") {
                std::vector<std::vector<double>> train_rows(
                    design.rows.begin() + static_cast<std::ptrdiff_t>(start),
                    design.rows.begin() + static_cast<std::ptrdiff_t>(end));
                std::vector<double> train_y(
                    design.targets.begin() + static_cast<std::ptrdiff_t>(start),
                    design.targets.begin() + static_cast<std::ptrdiff_t>(end));
                const auto model = fit_ridge(train_rows, train_y, spec.ridge_alpha);
                prediction = forecast_one_step(model, design.rows[end]);
            } else {
                // The predicted design row targets return t_e = end + offset;
                // the ARMA window is every return before it (expanding) or the
                // trailing rolling_length returns (rolling).
                const std::size_t t_end = end + spec.row_return_offset;
                const std::size_t t_start =
                    scheme.kind == WindowKind::kRolling && t_end > scheme.rolling_length
                        ? t_end - scheme.rolling_length
                        : 0;
                std::span<const double> window(spec.raw_returns.data() + t_start, t_end - t_start);
                const auto model = spec.arma_reselect
                                       ? aic_order_search(window, spec.arma_max_p, spec.arma_max_q)
                                       : fit_arma(window, spec.arma_p, spec.arma_q);
                prediction = forecast_one_step(model);
                if (!model.converged) rec.message = "simplex not converged";
            }
            if (!std::isfinite(prediction))
                throw std::runtime_error("non-finite prediction");
            rec.predicted_return = prediction;
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.message = e.what();
        }
    };
    parallel_for(result.records.size(), threads, run_step);

    // Price reconstruction over the successful steps via the core transform,
    // keeping records bit-identical to reconstruct_prices output.
    std::vector<double> priors, preds;
    for (const auto& rec : result.records) {
        if (rec.failed) continue;
        priors.push_back(rec.prior_close);
        preds.push_back(rec.predicted_return);
    }
    const auto reconstructed = reconstruct_prices(priors, preds);
    std::size_t j = 0;
    for (auto& rec : result.records)
        if (!rec.failed) rec.reconstructed_close = reconstructed[j++];
    return result;
}

}  // namespace wfcast
