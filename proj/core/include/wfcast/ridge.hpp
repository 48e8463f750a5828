#pragma once

#include <span>
#include <vector>

namespace wfcast {

struct RidgeModel {
    double alpha = 0.0;
    std::vector<double> coefficients;
    double intercept = 0.0;
};

/**
 * Closed-form ridge via the normal equations.
 *
 * Features are standardized internally (mean 0, sd 1 from the training data
 * only) because lag and indicator columns differ in scale by orders of
 * magnitude; the penalty applies in standardized space, the intercept is not
 * penalized, and coefficients are mapped back to the original scale.
 * Constant columns get coefficient 0. alpha = 0 with collinear columns is
 * rejected with a hint to use alpha > 0.
 */
RidgeModel fit_ridge(const std::vector<std::vector<double>>& rows, std::span<const double> targets,
                     double alpha);

std::vector<double> predict_ridge(const RidgeModel& model,
                                  const std::vector<std::vector<double>>& rows);

double forecast_one_step(const RidgeModel& model, std::span<const double> features);

}  // namespace wfcast
