#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "regkit/common.hpp"
#include "regkit/rng.hpp"
#include "regkit/tree.hpp"

namespace regkit {

struct BoostParams {
    std::size_t n_rounds = 200;
    double learning_rate = 0.1;
    double lambda = 1.0;
    double gamma = 0.0;
    std::size_t max_depth = 6;
    double min_child_weight = 1.0;
    double subsample = 1.0;
    std::optional<double> base_score;  // unset: mean of training targets
    std::uint64_t seed = 0;
};

struct BoostModel {
    double base_score = 0.0;
    std::vector<Tree> trees;  // leaf values carry the learning rate already
    BoostParams params;
    std::vector<double> importance_raw;  // per-feature accumulated split gain
};

// Squared-error loss 1/2(y-yhat)^2, so g = yhat - y and h = 1. Each round
// fits one gradient-criterion tree against the running predictions; earlier
// trees are never revisited.
inline BoostModel fit_boost(const Matrix& X, const Vector& y, const BoostParams& params) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto d = static_cast<std::size_t>(X.cols());
    if (n < 1) throw Error("fit_boost: empty data");
    if (X.rows() != y.size()) throw Error("fit_boost: row count mismatch");
    if (!X.allFinite() || !y.allFinite()) throw Error("fit_boost: non-finite input");
    if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0))
        throw Error("fit_boost: learning_rate must lie in (0,1]");
    if (params.lambda < 0.0 || params.gamma < 0.0 || params.min_child_weight < 0.0)
        throw Error("fit_boost: negative regularization");
    if (!(params.subsample > 0.0 && params.subsample <= 1.0))
        throw Error("fit_boost: subsample must lie in (0,1]");
    if (params.subsample * static_cast<double>(n) < 1.0)
        throw Error("fit_boost: subsample leaves no rows");

    BoostModel model;
    model.params = params;
    model.base_score = params.base_score ? *params.base_score : y.mean();
    model.importance_raw.assign(d, 0.0);

    const SortedOrders presorted = sort_features(X);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = X;

    GrowthParams growth;
    growth.max_depth = params.max_depth;
    growth.min_samples_leaf = 1;
    growth.max_features = 0;
    growth.min_gain = 0.0;
    const SplitCriterion crit{params.lambda, params.gamma, params.min_child_weight};

    Vector yhat = Vector::Constant(y.size(), model.base_score);
    std::vector<double> g(n), h(n, 1.0);
    std::vector<std::uint32_t> counts;
    for (std::size_t t = 0; t < params.n_rounds; ++t) {
        for (std::size_t i = 0; i < n; ++i)
            g[i] = yhat(static_cast<Eigen::Index>(i)) - y(static_cast<Eigen::Index>(i));

        Rng rng = Rng::derive(params.seed, static_cast<std::uint64_t>(t));
        const std::vector<std::uint32_t>* mult = nullptr;
        if (params.subsample < 1.0) {
            auto m = static_cast<std::size_t>(
                std::llround(params.subsample * static_cast<double>(n)));
            m = std::min(std::max<std::size_t>(m, 1), n);
            counts.assign(n, 0);
            for (const auto r : rng.choose(n, m)) counts[r] = 1;
            mult = &counts;
        }

        Tree tree = grow(X, g, h, mult, growth, crit, rng, &presorted, &model.importance_raw);
        for (auto& node : tree.nodes) node.value *= params.learning_rate;
        for (std::size_t i = 0; i < n; ++i)
            yhat(static_cast<Eigen::Index>(i)) +=
                predict_tree(tree, rows.row(static_cast<Eigen::Index>(i)).data(), d);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

inline double predict_boost(const BoostModel& model, const double* x, std::size_t dim) {
    double acc = model.base_score;
    for (const auto& tree : model.trees) acc += predict_tree(tree, x, dim);
    return acc;
}

inline double predict_boost(const BoostModel& model, const Vector& x) {
    return predict_boost(model, x.data(), static_cast<std::size_t>(x.size()));
}

inline Vector predict_boost_batch(const BoostModel& model, const Matrix& X) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = X;
    Vector out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out(i) = predict_boost(model, rows.row(i).data(), static_cast<std::size_t>(X.cols()));
    return out;
}

// Per-feature share of total accumulated split gain; all zeros when the
// ensemble never split.
inline std::vector<double> feature_importance(const BoostModel& model) {
    double total = 0.0;
    for (const auto v : model.importance_raw) total += v;
    std::vector<double> scores(model.importance_raw.size(), 0.0);
    if (total > 0.0)
        for (std::size_t j = 0; j < scores.size(); ++j)
            scores[j] = model.importance_raw[j] / total;
    return scores;
}

}  // namespace regkit
