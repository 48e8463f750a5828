#include "wfcast/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "wfcast/parallel.hpp"
#include "wfcast/version.hpp"

namespace wfcast {

namespace {

// One feature's best candidate inside a node. `bin` is the histogram bucket
// of the chosen threshold; -1 in exact mode.
struct FeatureBest {
    bool valid = false;
    double gain = 0.0;
    double threshold = 0.0;
    int bin = -1;
};

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    int bin = -1;
};

struct GainContext {
    double reg_lambda;
    double gamma;
    double min_child_weight;
    double total_g;
    double total_h;
    double parent_score;  // total_g^2 / (total_h + reg_lambda)
};

double split_gain(const GainContext& ctx, double gl, double hl) {
    const double gr = ctx.total_g - gl;
    const double hr = ctx.total_h - hl;
    return 0.5 * (gl * gl / (hl + ctx.reg_lambda) + gr * gr / (hr + ctx.reg_lambda) -
                  ctx.parent_score) -
           ctx.gamma;
}

// Midpoint that never lands strictly right of b; if a and b are adjacent
// floats the threshold falls back to a (rows equal to a still go left).
double midpoint(double a, double b) {
    double m = a + 0.5 * (b - a);
    if (!(m < b)) m = a;
    return m;
}

// Candidate thresholds for one column in histogram mode: all midpoints when
// the column has at most max_bins distinct values (then histogram and exact
// search coincide), otherwise equal-population quantile cuts.
std::vector<double> build_thresholds(const std::vector<double>& column, int max_bins) {
    std::vector<double> sorted(column);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct(sorted);
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> thresholds;
    if (distinct.size() <= 1) return thresholds;
    if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
        thresholds.reserve(distinct.size() - 1);
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
            thresholds.push_back(midpoint(distinct[i], distinct[i + 1]));
        return thresholds;
    }
    const std::size_t n = sorted.size();
    for (int j = 1; j < max_bins; ++j) {
        const std::size_t pos = static_cast<std::size_t>(
            (static_cast<unsigned long long>(j) * n) / static_cast<unsigned long long>(max_bins));
        if (pos == 0 || pos >= n) continue;
        if (sorted[pos - 1] < sorted[pos])
            thresholds.push_back(midpoint(sorted[pos - 1], sorted[pos]));
    }
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    return thresholds;
}

// Recomputes a candidate's gain by summing the left side in node-row order.
// Different features see the same rows in the same order this way, so a
// structural tie (two features inducing the same partition) compares as an
// exact tie and resolves to the lower feature index.
template <typename LeftPredicate>
void finalize_candidate(FeatureBest& best, std::span<const std::uint32_t> node_rows,
                        std::span<const double> g, std::span<const double> h,
                        const GainContext& ctx, LeftPredicate&& goes_left) {
    if (!best.valid) return;
    double gl = 0.0, hl = 0.0;
    for (auto r : node_rows) {
        if (goes_left(r)) {
            gl += g[r];
            hl += h[r];
        }
    }
    best.gain = split_gain(ctx, gl, hl);
    if (!(best.gain > 0.0)) best.valid = false;
}

// Exact-greedy scan of one column over the node's rows. Rows are sorted by
// (value, row index) so gradient accumulation order is reproducible; the
// ascending scan with strict improvement keeps the lowest winning threshold.
FeatureBest scan_feature_exact(const std::vector<double>& column,
                               std::span<const std::uint32_t> node_rows,
                               std::span<const double> g, std::span<const double> h,
                               const GainContext& ctx) {
    std::vector<std::pair<double, std::uint32_t>> order;
    order.reserve(node_rows.size());
    for (auto r : node_rows) order.emplace_back(column[r], r);
    std::sort(order.begin(), order.end());

    FeatureBest best;
    double gl = 0.0, hl = 0.0;
    std::size_t i = 0;
    const std::size_t n = order.size();
    while (i < n) {
        const double v = order[i].first;
        // Group subtotal first, then fold into the running sum: the same
        // association as the histogram sweep, so the two modes agree bit for
        // bit whenever buckets coincide with distinct values.
        double group_g = 0.0, group_h = 0.0;
        while (i < n && order[i].first == v) {
            group_g += g[order[i].second];
            group_h += h[order[i].second];
            ++i;
        }
        gl += group_g;
        hl += group_h;
        if (i >= n) break;
        const double hr = ctx.total_h - hl;
        if (!(hl > 0.0) || !(hr > 0.0)) continue;
        if (hl < ctx.min_child_weight || hr < ctx.min_child_weight) continue;
        const double gain = split_gain(ctx, gl, hl);
        if (gain > best.gain) {
            best.valid = true;
            best.gain = gain;
            best.threshold = midpoint(v, order[i].first);
        }
    }
    finalize_candidate(best, node_rows, g, h, ctx,
                       [&](std::uint32_t r) { return column[r] <= best.threshold; });
    return best;
}

// Histogram scan: accumulate per-bucket sums in node-row order, then sweep
// buckets left to right.
FeatureBest scan_feature_hist(const std::vector<std::uint16_t>& bins,
                              const std::vector<double>& thresholds,
                              std::span<const std::uint32_t> node_rows,
                              std::span<const double> g, std::span<const double> h,
                              const GainContext& ctx) {
    const std::size_t m = thresholds.size();
    FeatureBest best;
    if (m == 0) return best;
    std::vector<double> hist_g(m + 1, 0.0), hist_h(m + 1, 0.0);
    for (auto r : node_rows) {
        hist_g[bins[r]] += g[r];
        hist_h[bins[r]] += h[r];
    }
    double gl = 0.0, hl = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
        gl += hist_g[b];
        hl += hist_h[b];
        const double hr = ctx.total_h - hl;
        if (!(hl > 0.0)) continue;
        if (!(hr > 0.0)) break;
        if (hl < ctx.min_child_weight || hr < ctx.min_child_weight) continue;
        const double gain = split_gain(ctx, gl, hl);
        if (gain > best.gain) {
            best.valid = true;
            best.gain = gain;
            best.threshold = thresholds[b];
            best.bin = static_cast<int>(b);
        }
    }
    finalize_candidate(best, node_rows, g, h, ctx, [&](std::uint32_t r) {
        return bins[r] <= static_cast<std::uint16_t>(best.bin);
    });
    return best;
}

class TreeGrower {
  public:
    TreeGrower(const std::vector<std::vector<double>>& columns,
               const std::vector<std::vector<double>>* thresholds,
               const std::vector<std::vector<std::uint16_t>>* bin_index,
               std::span<const double> g, std::span<const double> h, const GbtParams& params,
               std::span<const int> col_sample)
        : columns_(columns),
          thresholds_(thresholds),
          bin_index_(bin_index),
          g_(g),
          h_(h),
          params_(params),
          col_sample_(col_sample) {}

    Tree grow(std::vector<std::uint32_t>& rows) {
        Tree tree;
        build_node(tree, rows.data(), rows.data() + rows.size(), 0);
        return tree;
    }

  private:
    int build_node(Tree& tree, std::uint32_t* lo, std::uint32_t* hi, int depth) {
        const int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        double total_g = 0.0, total_h = 0.0;
        for (auto* it = lo; it != hi; ++it) {
            total_g += g_[*it];
            total_h += h_[*it];
        }

        std::optional<SplitChoice> split;
        if (depth < params_.max_depth && hi - lo >= 2)
            split = find_split({lo, static_cast<std::size_t>(hi - lo)}, total_g, total_h);

        if (split) {
            const auto& column = columns_[static_cast<std::size_t>(split->feature)];
            std::uint32_t* mid;
            if (split->bin >= 0) {
                const auto& bins = (*bin_index_)[static_cast<std::size_t>(split->feature)];
                const auto b = static_cast<std::uint16_t>(split->bin);
                mid = std::stable_partition(lo, hi, [&](std::uint32_t r) { return bins[r] <= b; });
            } else {
                const double thr = split->threshold;
                mid = std::stable_partition(lo, hi, [&](std::uint32_t r) { return column[r] <= thr; });
            }
            const int left = build_node(tree, lo, mid, depth + 1);
            const int right = build_node(tree, mid, hi, depth + 1);
            auto& node = tree.nodes[static_cast<std::size_t>(idx)];
            node.is_leaf = false;
            node.feature = split->feature;
            node.threshold = split->threshold;
            node.gain = split->gain;
            node.left = left;
            node.right = right;
        } else {
            auto& node = tree.nodes[static_cast<std::size_t>(idx)];
            node.weight = leaf_weight(total_g, total_h, params_.reg_alpha, params_.reg_lambda);
        }
        return idx;
    }

    std::optional<SplitChoice> find_split(std::span<const std::uint32_t> node_rows, double total_g,
                                          double total_h) {
        GainContext ctx{params_.reg_lambda, params_.gamma, params_.min_child_weight,
                        total_g, total_h,
                        total_g * total_g / (total_h + params_.reg_lambda)};

        std::vector<FeatureBest> per_feature(col_sample_.size());
        auto scan_one = [&](std::size_t k) {
            const auto f = static_cast<std::size_t>(col_sample_[k]);
            per_feature[k] = (params_.split_mode == SplitMode::kHistogram)
                                 ? scan_feature_hist((*bin_index_)[f], (*thresholds_)[f], node_rows,
                                                     g_, h_, ctx)
                                 : scan_feature_exact(columns_[f], node_rows, g_, h_, ctx);
        };
        // Feature scans are independent; the reduction below runs in feature
        // order, so the thread schedule cannot change the chosen split.
        if (params_.threads > 1 && node_rows.size() * col_sample_.size() > 4096)
            parallel_for(col_sample_.size(), params_.threads, scan_one);
        else
            for (std::size_t k = 0; k < col_sample_.size(); ++k) scan_one(k);

        std::optional<SplitChoice> best;
        for (std::size_t k = 0; k < col_sample_.size(); ++k) {
            const auto& fb = per_feature[k];
            if (!fb.valid) continue;
            if (!best || fb.gain > best->gain)
                best = SplitChoice{col_sample_[k], fb.threshold, fb.gain, fb.bin};
        }
        return best;
    }

    const std::vector<std::vector<double>>& columns_;
    const std::vector<std::vector<double>>* thresholds_;
    const std::vector<std::vector<std::uint16_t>>* bin_index_;
    std::span<const double> g_;
    std::span<const double> h_;
    const GbtParams& params_;
    std::span<const int> col_sample_;
};

// Seeded sample without replacement, returned sorted ascending. fraction = 1
// short-circuits to the identity (and draws nothing from the generator).
template <typename Int>
std::vector<Int> sample_fraction(std::mt19937_64& rng, std::size_t n, double fraction) {
    std::vector<Int> idx(n);
    std::iota(idx.begin(), idx.end(), Int{0});
    const auto m = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9)));
    if (m >= n) return idx;
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> dist(i, n - 1);
        std::swap(idx[i], idx[dist(rng)]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

nlohmann::json node_to_json(const TreeNode& n) {
    if (n.is_leaf) return nlohmann::json{{"weight", n.weight}};
    return nlohmann::json{{"feature", n.feature}, {"threshold", n.threshold}, {"gain", n.gain},
                          {"left", n.left},       {"right", n.right}};
}

TreeNode node_from_json(const nlohmann::json& j) {
    TreeNode n;
    if (j.contains("weight")) {
        n.weight = j.at("weight").get<double>();
        return n;
    }
    n.is_leaf = false;
    n.feature = j.at("feature").get<int>();
    n.threshold = j.at("threshold").get<double>();
    n.gain = j.at("gain").get<double>();
    n.left = j.at("left").get<int>();
    n.right = j.at("right").get<int>();
    return n;
}

}  // namespace

void GbtParams::validate() const {
    if (n_estimators < 0) throw std::invalid_argument("GbtParams: n_estimators must be >= 0");
    if (max_depth < 1) throw std::invalid_argument("GbtParams: max_depth must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("GbtParams: learning_rate must be > 0");
    if (!(subsample > 0.0) || subsample > 1.0)
        throw std::invalid_argument("GbtParams: subsample must be in (0,1]");
    if (!(colsample_bytree > 0.0) || colsample_bytree > 1.0)
        throw std::invalid_argument("GbtParams: colsample_bytree must be in (0,1]");
    if (gamma < 0.0) throw std::invalid_argument("GbtParams: gamma must be >= 0");
    if (min_child_weight < 0.0)
        throw std::invalid_argument("GbtParams: min_child_weight must be >= 0");
    if (reg_alpha < 0.0) throw std::invalid_argument("GbtParams: reg_alpha must be >= 0");
    if (reg_lambda < 0.0) throw std::invalid_argument("GbtParams: reg_lambda must be >= 0");
    if (max_bins < 2 || max_bins > 65535)
        throw std::invalid_argument("GbtParams: max_bins must be in [2, 65535]");
}

double Tree::predict_row(std::span<const double> features) const {
    const TreeNode* node = &nodes[0];
    while (!node->is_leaf) {
        const auto f = static_cast<std::size_t>(node->feature);
        node = features[f] <= node->threshold ? &nodes[static_cast<std::size_t>(node->left)]
                                              : &nodes[static_cast<std::size_t>(node->right)];
    }
    return node->weight;
}

double GbtModel::predict_row(std::span<const double> features) const {
    double acc = 0.0;
    for (const auto& tree : trees) acc += tree.predict_row(features);
    return base_score + params.learning_rate * acc;
}

double leaf_weight(double grad_sum, double hess_sum, double reg_alpha, double reg_lambda) {
    if (!(hess_sum > 0.0))
        throw std::invalid_argument("leaf_weight: hessian sum must be > 0");
    const double shrunk = std::max(std::abs(grad_sum) - reg_alpha, 0.0);
    const double sign = grad_sum > 0.0 ? 1.0 : (grad_sum < 0.0 ? -1.0 : 0.0);
    return -sign * shrunk / (hess_sum + reg_lambda);
}

std::optional<SplitCandidate> best_split(const std::vector<std::vector<double>>& columns,
                                         std::span<const double> gradients,
                                         std::span<const double> hessians,
                                         double reg_lambda, double gamma,
                                         double min_child_weight) {
    const std::size_t n = gradients.size();
    if (hessians.size() != n)
        throw std::invalid_argument("best_split: gradient/hessian length mismatch");
    for (const auto& col : columns)
        if (col.size() != n) throw std::invalid_argument("best_split: column length mismatch");
    if (n < 2) return std::nullopt;

    double total_g = 0.0, total_h = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total_g += gradients[i];
        total_h += hessians[i];
    }
    GainContext ctx{reg_lambda, gamma, min_child_weight, total_g, total_h,
                    total_g * total_g / (total_h + reg_lambda)};

    std::vector<std::uint32_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0u);

    std::optional<SplitCandidate> best;
    for (std::size_t f = 0; f < columns.size(); ++f) {
        const auto fb = scan_feature_exact(columns[f], rows, gradients, hessians, ctx);
        if (!fb.valid) continue;
        if (!best || fb.gain > best->gain)
            best = SplitCandidate{static_cast<int>(f), fb.threshold, fb.gain};
    }
    return best;
}

GbtModel fit_gbt(const std::vector<std::vector<double>>& rows, std::span<const double> targets,
                 const GbtParams& params, std::vector<std::string> feature_names) {
    params.validate();
    const std::size_t n = rows.size();
    if (n < 2) throw std::invalid_argument("fit_gbt: need at least 2 rows");
    if (targets.size() != n)
        throw std::invalid_argument("fit_gbt: row/target count mismatch");
    const std::size_t p = rows[0].size();
    if (p == 0) throw std::invalid_argument("fit_gbt: need at least one feature");
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != p)
            throw std::invalid_argument("fit_gbt: ragged feature row at index " + std::to_string(i));
        for (double v : rows[i])
            if (!std::isfinite(v))
                throw std::invalid_argument("fit_gbt: non-finite feature at row " + std::to_string(i));
        if (!std::isfinite(targets[i]))
            throw std::invalid_argument("fit_gbt: non-finite target at row " + std::to_string(i));
    }
    if (feature_names.empty()) {
        feature_names.reserve(p);
        for (std::size_t f = 0; f < p; ++f) feature_names.push_back("f" + std::to_string(f));
    } else if (feature_names.size() != p) {
        throw std::invalid_argument("fit_gbt: feature name count mismatch");
    }

    std::vector<std::vector<double>> columns(p, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < p; ++f) columns[f][i] = rows[i][f];

    GbtModel model;
    model.params = params;
    model.feature_names = std::move(feature_names);
    model.feature_gain_totals.assign(p, 0.0);

    double sum = 0.0;
    for (double y : targets) sum += y;
    model.base_score = sum / static_cast<double>(n);

    std::vector<std::vector<double>> thresholds;
    std::vector<std::vector<std::uint16_t>> bin_index;
    if (params.split_mode == SplitMode::kHistogram) {
        thresholds.resize(p);
        bin_index.assign(p, std::vector<std::uint16_t>(n));
        for (std::size_t f = 0; f < p; ++f) {
            thresholds[f] = build_thresholds(columns[f], params.max_bins);
            const auto& th = thresholds[f];
            for (std::size_t i = 0; i < n; ++i) {
                const auto it = std::lower_bound(th.begin(), th.end(), columns[f][i]);
                bin_index[f][i] = static_cast<std::uint16_t>(it - th.begin());
            }
        }
    }

    std::vector<double> pred(n, model.base_score);
    std::vector<double> g(n), h(n, 1.0);
    std::mt19937_64 rng(params.seed);
    model.trees.reserve(static_cast<std::size_t>(params.n_estimators));

    for (int round = 0; round < params.n_estimators; ++round) {
        for (std::size_t i = 0; i < n; ++i) g[i] = pred[i] - targets[i];

        auto row_sample = sample_fraction<std::uint32_t>(rng, n, params.subsample);
        auto col_sample = sample_fraction<int>(rng, p, params.colsample_bytree);

        TreeGrower grower(columns,
                          params.split_mode == SplitMode::kHistogram ? &thresholds : nullptr,
                          params.split_mode == SplitMode::kHistogram ? &bin_index : nullptr,
                          g, h, params, col_sample);
        Tree tree = grower.grow(row_sample);

        for (std::size_t i = 0; i < n; ++i)
            pred[i] += params.learning_rate * tree.predict_row(rows[i]);
        for (const auto& node : tree.nodes)
            if (!node.is_leaf)
                model.feature_gain_totals[static_cast<std::size_t>(node.feature)] += node.gain;
        model.trees.push_back(std::move(tree));
    }
    return model;
}

GbtModel fit_gbt(const DesignMatrix& design, const GbtParams& params) {
    return fit_gbt(design.rows, design.targets, params, design.feature_names);
}

std::vector<double> predict_gbt(const GbtModel& model, const std::vector<std::vector<double>>& rows) {
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != model.feature_names.size())
            throw std::invalid_argument("predict_gbt: feature count mismatch at row " +
                                        std::to_string(i) + " (" + std::to_string(rows[i].size()) +
                                        " vs " + std::to_string(model.feature_names.size()) + ")");
        out[i] = model.predict_row(rows[i]);
    }
    return out;
}

std::vector<std::pair<std::string, double>> gain_importance(const GbtModel& model) {
    std::vector<std::pair<std::string, double>> ranked;
    std::vector<std::size_t> order;
    for (std::size_t f = 0; f < model.feature_gain_totals.size(); ++f)
        if (model.feature_gain_totals[f] > 0.0) order.push_back(f);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return model.feature_gain_totals[a] > model.feature_gain_totals[b];
    });
    ranked.reserve(order.size());
    for (auto f : order)
        ranked.emplace_back(model.feature_names[f], model.feature_gain_totals[f]);
    return ranked;
}

std::string save_model(const GbtModel& model) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "gbt_model";
    j["params"] = {
        {"n_estimators", model.params.n_estimators},
        {"max_depth", model.params.max_depth},
        {"learning_rate", model.params.learning_rate},
        {"subsample", model.params.subsample},
        {"colsample_bytree", model.params.colsample_bytree},
        {"gamma", model.params.gamma},
        {"min_child_weight", model.params.min_child_weight},
        {"reg_alpha", model.params.reg_alpha},
        {"reg_lambda", model.params.reg_lambda},
        {"seed", model.params.seed},
        {"split_mode", model.params.split_mode == SplitMode::kHistogram ? "histogram" : "exact"},
        {"max_bins", model.params.max_bins},
    };
    j["base_score"] = model.base_score;
    j["feature_names"] = model.feature_names;
    j["feature_gain_totals"] = model.feature_gain_totals;
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& node : tree.nodes) nodes.push_back(node_to_json(node));
        trees.push_back(nlohmann::json{{"nodes", std::move(nodes)}});
    }
    j["trees"] = std::move(trees);
    return j.dump(2);
}

GbtModel load_model(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("kind", "") != "gbt_model")
        throw std::invalid_argument("load_model: not a gbt_model document");
    GbtModel model;
    const auto& jp = j.at("params");
    model.params.n_estimators = jp.at("n_estimators").get<int>();
    model.params.max_depth = jp.at("max_depth").get<int>();
    model.params.learning_rate = jp.at("learning_rate").get<double>();
    model.params.subsample = jp.at("subsample").get<double>();
    model.params.colsample_bytree = jp.at("colsample_bytree").get<double>();
    model.params.gamma = jp.at("gamma").get<double>();
    model.params.min_child_weight = jp.at("min_child_weight").get<double>();
    model.params.reg_alpha = jp.at("reg_alpha").get<double>();
    model.params.reg_lambda = jp.at("reg_lambda").get<double>();
    model.params.seed = jp.at("seed").get<std::uint64_t>();
    model.params.split_mode =
        jp.at("split_mode").get<std::string>() == "exact" ? SplitMode::kExact : SplitMode::kHistogram;
    model.params.max_bins = jp.at("max_bins").get<int>();
    model.base_score = j.at("base_score").get<double>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.feature_gain_totals = j.at("feature_gain_totals").get<std::vector<double>>();
    for (const auto& jt : j.at("trees")) {
        Tree tree;
        for (const auto& jn : jt.at("nodes")) tree.nodes.push_back(node_from_json(jn));
        model.trees.push_back(std::move(tree));
    }
    if (model.feature_gain_totals.size() != model.feature_names.size())
        throw std::invalid_argument("load_model: gain totals misaligned with feature names");
    return model;
}

}  // namespace wfcast
