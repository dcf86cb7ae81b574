#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "regkit/common.hpp"
#include "regkit/metrics.hpp"
#include "regkit/rng.hpp"

namespace regkit {

struct FoldPlan {
    std::size_t k = 0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> fold_assignment;  // row -> fold id
};

// Seeded shuffle, then contiguous chunks; the first n mod k folds take the
// extra row.
inline FoldPlan kfold_plan(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error("kfold_plan: need k >= 2");
    if (k > n) throw Error("kfold_plan: k exceeds n");
    FoldPlan plan{k, n, seed, std::vector<std::size_t>(n)};
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng = Rng::derive(seed, /*stream_id=*/0xf01d);
    rng.shuffle(perm);
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t at = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) plan.fold_assignment[perm[at++]] = f;
    }
    return plan;
}

using Predictor = std::function<Vector(const Matrix&)>;
using TrainFn = std::function<Predictor(const Matrix&, const Vector&)>;

struct CvResult {
    std::vector<double> fold_r2;               // one entry per scored fold
    std::vector<std::size_t> excluded_folds;   // folds whose targets broke scoring
    std::vector<std::string> exclusion_notes;
    double cv_score = 0.0;  // 100 x mean of fold_r2
};

// Fit on the rows outside each fold, score R^2 inside it. Folds whose
// validation targets cannot be scored (constant) are excluded and reported;
// fitting errors propagate to the caller.
inline CvResult cross_validate(const TrainFn& train, const Matrix& X, const Vector& y,
                               const FoldPlan& plan) {
    if (plan.n != static_cast<std::size_t>(X.rows()) || X.rows() != y.size())
        throw Error("cross_validate: plan does not match data");
    CvResult result;
    for (std::size_t f = 0; f < plan.k; ++f) {
        std::vector<std::size_t> train_rows, val_rows;
        for (std::size_t i = 0; i < plan.n; ++i)
            (plan.fold_assignment[i] == f ? val_rows : train_rows).push_back(i);
        Matrix Xtr(static_cast<Eigen::Index>(train_rows.size()), X.cols());
        Vector ytr(static_cast<Eigen::Index>(train_rows.size()));
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(train_rows[i]));
            ytr(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(train_rows[i]));
        }
        Matrix Xva(static_cast<Eigen::Index>(val_rows.size()), X.cols());
        Vector yva(static_cast<Eigen::Index>(val_rows.size()));
        for (std::size_t i = 0; i < val_rows.size(); ++i) {
            Xva.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(val_rows[i]));
            yva(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(val_rows[i]));
        }
        const Predictor predict = train(Xtr, ytr);
        const Vector pred = predict(Xva);
        try {
            result.fold_r2.push_back(r2_score(yva, pred));
        } catch (const Error& e) {
            result.excluded_folds.push_back(f);
            result.exclusion_notes.push_back(e.what());
        }
    }
    if (result.fold_r2.empty()) throw Error("cross_validate: every fold was excluded");
    double mean = 0.0;
    for (const auto r : result.fold_r2) mean += r;
    mean /= static_cast<double>(result.fold_r2.size());
    result.cv_score = 100.0 * mean;
    return result;
}

// Hyperparameter search works on name -> value-list axes; values stay text
// until the model family parses them, so grids can come straight from
// config files.
struct ParamGrid {
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
};

using ParamAssignment = std::vector<std::pair<std::string, std::string>>;
using ModelFamily = std::function<TrainFn(const ParamAssignment&)>;

struct EvaluatedConfig {
    ParamAssignment config;
    std::vector<double> fold_r2;
    double cv_score = -std::numeric_limits<double>::infinity();
    bool failed = false;
    std::string diagnostic;
    std::size_t rank = 0;
};

struct SearchResult {
    std::vector<EvaluatedConfig> evaluated;  // enumeration order
    std::size_t best_index = 0;
    ParamAssignment best_config;
    double best_cv_score = -std::numeric_limits<double>::infinity();
};

// Shared scorer: evaluates each assignment in order; configs that throw are
// kept with a diagnostic and rank behind every scored config. Strictly
//-better comparison keeps the earliest enumerated config on ties.
inline SearchResult evaluate_configs(const ModelFamily& family,
                                     const std::vector<ParamAssignment>& configs, const Matrix& X,
                                     const Vector& y, const FoldPlan& plan) {
    if (configs.empty()) throw Error("evaluate_configs: no configurations");
    SearchResult result;
    bool any = false;
    for (const auto& config : configs) {
        EvaluatedConfig ev;
        ev.config = config;
        try {
            const TrainFn train = family(config);
            const CvResult cv = cross_validate(train, X, y, plan);
            ev.fold_r2 = cv.fold_r2;
            ev.cv_score = cv.cv_score;
        } catch (const Error& e) {
            ev.failed = true;
            ev.diagnostic = e.what();
            ev.cv_score = -std::numeric_limits<double>::infinity();
        }
        if (!ev.failed && (!any || ev.cv_score > result.best_cv_score)) {
            any = true;
            result.best_index = result.evaluated.size();
            result.best_cv_score = ev.cv_score;
            result.best_config = config;
        }
        result.evaluated.push_back(std::move(ev));
    }
    if (!any) throw Error("evaluate_configs: every configuration failed");

    std::vector<std::size_t> order(result.evaluated.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return result.evaluated[a].cv_score > result.evaluated[b].cv_score;
    });
    for (std::size_t r = 0; r < order.size(); ++r) result.evaluated[order[r]].rank = r;
    return result;
}

inline std::vector<ParamAssignment> enumerate_grid(const ParamGrid& grid) {
    auto axes = grid.axes;
    std::sort(axes.begin(), axes.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [name, values] : axes)
        if (values.empty()) throw Error("enumerate_grid: axis '" + name + "' has no values");
    std::vector<ParamAssignment> configs;
    std::vector<std::size_t> at(axes.size(), 0);
    while (true) {
        ParamAssignment config;
        for (std::size_t a = 0; a < axes.size(); ++a)
            config.emplace_back(axes[a].first, axes[a].second[at[a]]);
        configs.push_back(std::move(config));
        std::size_t a = axes.size();
        while (a-- > 0) {
            if (++at[a] < axes[a].second.size()) break;
            at[a] = 0;
            if (a == 0) return configs;
        }
        if (axes.empty()) return configs;
    }
}

inline SearchResult grid_search(const ModelFamily& family, const ParamGrid& grid, const Matrix& X,
                                const Vector& y, const FoldPlan& plan) {
    if (grid.axes.empty()) throw Error("grid_search: empty grid");
    return evaluate_configs(family, enumerate_grid(grid), X, y, plan);
}

// Per-iteration index choice; the default draws uniformly with replacement.
// Tests can substitute a deterministic sampler.
using SearchSampler =
    std::function<std::size_t(std::size_t iter, std::size_t axis, std::size_t n_values)>;

inline SearchResult random_search(const ModelFamily& family, const ParamGrid& distributions,
                                  std::size_t n_iter, std::uint64_t seed, const Matrix& X,
                                  const Vector& y, const FoldPlan& plan,
                                  SearchSampler sampler = nullptr) {
    if (distributions.axes.empty()) throw Error("random_search: empty distributions");
    if (n_iter < 1) throw Error("random_search: need n_iter >= 1");
    auto axes = distributions.axes;
    std::sort(axes.begin(), axes.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [name, values] : axes)
        if (values.empty()) throw Error("random_search: axis '" + name + "' has no values");
    Rng rng = Rng::derive(seed, /*stream_id=*/0x5a3c);
    std::vector<ParamAssignment> configs;
    for (std::size_t it = 0; it < n_iter; ++it) {
        ParamAssignment config;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const std::size_t pick = sampler ? sampler(it, a, axes[a].second.size())
                                             : rng.below(axes[a].second.size());
            if (pick >= axes[a].second.size()) throw Error("random_search: sampler out of range");
            config.emplace_back(axes[a].first, axes[a].second[pick]);
        }
        configs.push_back(std::move(config));
    }
    return evaluate_configs(family, configs, X, y, plan);
}

}  // namespace regkit
