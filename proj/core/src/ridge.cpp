#include "wfcast/ridge.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wfcast {

namespace {
// Columns with essentially zero spread carry no information beyond the
// intercept; they are dropped from the standardized system.
constexpr double kDegenerateSd = 1e-12;
}

RidgeModel fit_ridge(const std::vector<std::vector<double>>& rows, std::span<const double> targets,
                     double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("fit_ridge: alpha must be >= 0");
    const std::size_t n = rows.size();
    if (n == 0) throw std::invalid_argument("fit_ridge: need at least 1 row");
    if (targets.size() != n) throw std::invalid_argument("fit_ridge: row/target count mismatch");
    const std::size_t p = rows[0].size();
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != p)
            throw std::invalid_argument("fit_ridge: ragged feature row at index " + std::to_string(i));
        for (double v : rows[i])
            if (!std::isfinite(v))
                throw std::invalid_argument("fit_ridge: non-finite feature at row " + std::to_string(i));
        if (!std::isfinite(targets[i]))
            throw std::invalid_argument("fit_ridge: non-finite target at row " + std::to_string(i));
    }

    double y_mean = 0.0;
    for (double y : targets) y_mean += y;
    y_mean /= static_cast<double>(n);

    std::vector<double> mean(p, 0.0), sd(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += rows[i][j];
        m /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = rows[i][j] - m;
            ss += d * d;
        }
        mean[j] = m;
        sd[j] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    }

    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < p; ++j)
        if (sd[j] > kDegenerateSd) active.push_back(j);

    RidgeModel model;
    model.alpha = alpha;
    model.coefficients.assign(p, 0.0);
    model.intercept = y_mean;
    if (active.empty()) return model;

    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(n), k);
    Eigen::VectorXd yc(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        yc(static_cast<Eigen::Index>(i)) = targets[i] - y_mean;
        for (std::size_t a = 0; a < active.size(); ++a) {
            const std::size_t j = active[a];
            Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) =
                (rows[i][j] - mean[j]) / sd[j];
        }
    }

    Eigen::VectorXd beta;
    if (alpha == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
        if (qr.rank() < k)
            throw std::invalid_argument(
                "fit_ridge: singular system at alpha=0 (collinear columns); use alpha > 0");
        beta = qr.solve(yc);
    } else {
        Eigen::MatrixXd A = Z.transpose() * Z;
        A.diagonal().array() += alpha;
        beta = A.llt().solve(Z.transpose() * yc);
    }

    for (std::size_t a = 0; a < active.size(); ++a) {
        const std::size_t j = active[a];
        model.coefficients[j] = beta(static_cast<Eigen::Index>(a)) / sd[j];
        model.intercept -= model.coefficients[j] * mean[j];
    }
    return model;
}

std::vector<double> predict_ridge(const RidgeModel& model,
                                  const std::vector<std::vector<double>>& rows) {
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = forecast_one_step(model, rows[i]);
    return out;
}

double forecast_one_step(const RidgeModel& model, std::span<const double> features) {
    if (features.size() != model.coefficients.size())
        throw std::invalid_argument("ridge forecast: feature count mismatch (" +
                                    std::to_string(features.size()) + " vs " +
                                    std::to_string(model.coefficients.size()) + ")");
    double acc = model.intercept;
    for (std::size_t j = 0; j < features.size(); ++j)
        acc += model.coefficients[j] * features[j];
    return acc;
}

}  // namespace wfcast
