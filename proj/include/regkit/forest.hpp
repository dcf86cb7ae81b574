#pragma once

#include <cstdint>
#include <vector>

#include "regkit/common.hpp"
#include "regkit/rng.hpp"
#include "regkit/tree.hpp"

namespace regkit {

struct ForestParams {
    std::size_t n_estimators = 200;
    GrowthParams growth{.max_depth = 8, .min_samples_leaf = 1, .max_features = 9, .min_gain = 0.0};
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct ForestModel {
    std::vector<Tree> trees;
    ForestParams params;
};

// Each tree sees an n-draw bootstrap resample (as per-row multiplicities)
// and consumes a private rng stream derived from (seed, tree index), so
// trees are independent of fit order.
inline ForestModel fit_forest(const Matrix& X, const Vector& y, const ForestParams& params) {
    if (params.n_estimators < 1) throw Error("fit_forest: need at least one tree");
    if (X.rows() != y.size()) throw Error("fit_forest: row count mismatch");
    if (X.rows() < 1) throw Error("fit_forest: empty data");
    if (!X.allFinite() || !y.allFinite()) throw Error("fit_forest: non-finite input");

    const auto n = static_cast<std::size_t>(X.rows());
    const SortedOrders presorted = sort_features(X);

    ForestModel model;
    model.params = params;
    model.trees.reserve(params.n_estimators);
    std::vector<std::uint32_t> counts;
    for (std::size_t t = 0; t < params.n_estimators; ++t) {
        Rng rng = Rng::derive(params.seed, static_cast<std::uint64_t>(t));
        const std::vector<std::uint32_t>* mult = nullptr;
        if (params.bootstrap) {
            counts.assign(n, 0);
            for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(n)];
            mult = &counts;
        }
        model.trees.push_back(fit_cart(X, y, params.growth, rng, mult, &presorted));
    }
    return model;
}

inline double predict_forest(const ForestModel& model, const double* x, std::size_t dim) {
    if (model.trees.empty()) throw Error("predict_forest: empty model");
    double acc = 0.0;
    for (const auto& tree : model.trees) acc += predict_tree(tree, x, dim);
    return acc / static_cast<double>(model.trees.size());
}

inline double predict_forest(const ForestModel& model, const Vector& x) {
    return predict_forest(model, x.data(), static_cast<std::size_t>(x.size()));
}

inline Vector predict_forest_batch(const ForestModel& model, const Matrix& X) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = X;
    Vector out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out(i) = predict_forest(model, rows.row(i).data(), static_cast<std::size_t>(X.cols()));
    return out;
}

}  // namespace regkit
