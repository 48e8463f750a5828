#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wfcast/features.hpp"

namespace wfcast {

enum class SplitMode { kExact, kHistogram };

/**
 * Hyperparameters of the boosted-tree regressor. The tuner produces values
 * inside the documented search ranges; direct callers may pass any positive
 * settings.
 */
struct GbtParams {
    int n_estimators = 200;
    int max_depth = 6;
    double learning_rate = 0.1;
    double subsample = 1.0;
    double colsample_bytree = 1.0;
    double gamma = 0.0;
    double min_child_weight = 1.0;
    double reg_alpha = 0.0;
    double reg_lambda = 1.0;
    std::uint64_t seed = 0;
    SplitMode split_mode = SplitMode::kHistogram;
    int max_bins = 256;
    int threads = 1;  // feature-parallel split search; never affects the result

    void validate() const;
};

/// Flat tree node: either a split (feature/threshold/gain/children) or a leaf
/// (weight). Rows with feature value <= threshold go left.
struct TreeNode {
    bool is_leaf = true;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict_row(std::span<const double> features) const;
};

/// Fitted ensemble. prediction = base_score + learning_rate * sum of tree
/// outputs; leaf weights are stored unscaled.
struct GbtModel {
    GbtParams params;
    double base_score = 0.0;
    std::vector<Tree> trees;
    std::vector<std::string> feature_names;
    std::vector<double> feature_gain_totals;  // aligned to feature_names

    double predict_row(std::span<const double> features) const;
};

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

/// Second-order leaf weight with L1 soft-threshold and L2 shrinkage:
/// w = -sign(G) * max(|G| - reg_alpha, 0) / (H + reg_lambda). Requires H > 0.
double leaf_weight(double grad_sum, double hess_sum, double reg_alpha, double reg_lambda);

/**
 * Exhaustive exact-greedy split search over all rows.
 *
 * Maximizes 0.5*[G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma
 * over midpoints between consecutive distinct values of every column. Returns
 * nullopt when the best gain is <= 0 or every candidate leaves a child with
 * hessian sum below min_child_weight. Ties break toward the lowest feature
 * index, then the lowest threshold.
 */
std::optional<SplitCandidate> best_split(const std::vector<std::vector<double>>& columns,
                                         std::span<const double> gradients,
                                         std::span<const double> hessians,
                                         double reg_lambda, double gamma,
                                         double min_child_weight);

/**
 * Fits the regularized boosted-tree ensemble on squared error.
 *
 * base_score is the target mean; each round fits one tree to the residual
 * gradients (g = pred - y, h = 1) on a seeded row subsample with a per-tree
 * column subsample. Deterministic for a fixed (data, params, seed) triple
 * regardless of thread count.
 */
GbtModel fit_gbt(const std::vector<std::vector<double>>& rows, std::span<const double> targets,
                 const GbtParams& params, std::vector<std::string> feature_names = {});

GbtModel fit_gbt(const DesignMatrix& design, const GbtParams& params);

std::vector<double> predict_gbt(const GbtModel& model, const std::vector<std::vector<double>>& rows);

/// Per-feature total retained-split gain, descending; ties break toward the
/// lower column index. Features that never split are omitted.
std::vector<std::pair<std::string, double>> gain_importance(const GbtModel& model);

/// JSON serialization of the full model (params, base score, trees, gain
/// totals); load_model(save_model(m)) reproduces predictions bit-for-bit.
std::string save_model(const GbtModel& model);
GbtModel load_model(const std::string& text);

}  // namespace wfcast
