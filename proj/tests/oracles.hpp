#pragma once

// Independent reference implementations the tests compare the library
// against. Everything here favors obviousness over speed: direct summation,
// exhaustive enumeration, no shared code with the headers under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "regkit/common.hpp"
#include "regkit/svr.hpp"
#include "regkit/tree.hpp"

namespace ref {

struct MetricsRef {
    double mse, rmse, mae, r2, adj_r2;
};

// Long-double accumulation in reverse index order, so even the summation
// order differs from the library.
inline MetricsRef metrics(const regkit::Vector& y, const regkit::Vector& p, std::size_t k) {
    const auto n = static_cast<std::size_t>(y.size());
    long double se = 0, ae = 0, mean = 0;
    for (std::size_t i = n; i-- > 0;) {
        const long double r = static_cast<long double>(y(i)) - static_cast<long double>(p(i));
        se += r * r;
        ae += r < 0 ? -r : r;
        mean += y(i);
    }
    mean /= n;
    long double ssm = 0;
    for (std::size_t i = n; i-- > 0;) {
        const long double d = y(i) - mean;
        ssm += d * d;
    }
    MetricsRef m{};
    m.mse = static_cast<double>(se / n);
    m.rmse = std::sqrt(m.mse);
    m.mae = static_cast<double>(ae / n);
    m.r2 = static_cast<double>(1.0L - se / ssm);
    m.adj_r2 = 1.0 - (1.0 - m.r2) * (static_cast<double>(n) - 1.0) /
                         (static_cast<double>(n) - static_cast<double>(k) - 1.0);
    return m;
}

struct SplitRef {
    std::size_t feature;
    double threshold;
    double gain;
};

// Every (feature, midpoint) candidate scored by direct partitioning. Ties
// resolve to the lowest feature, then the lowest threshold, like the
// library documents.
inline std::optional<SplitRef> best_split_exhaustive(
    const regkit::Matrix& X, const std::vector<std::uint32_t>& rows, const std::vector<double>& g,
    const std::vector<double>& h, const std::vector<std::uint32_t>* mult,
    const regkit::GrowthParams& params, const regkit::SplitCriterion& crit) {
    const auto d = static_cast<std::size_t>(X.cols());
    auto weight = [&](std::uint32_t r) { return mult ? (*mult)[r] : std::uint32_t{1}; };

    std::optional<SplitRef> best;
    for (std::size_t f = 0; f < d; ++f) {
        std::vector<double> values;
        for (const auto r : rows)
            if (weight(r) > 0) values.push_back(X(r, static_cast<Eigen::Index>(f)));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t v = 0; v + 1 < values.size(); ++v) {
            const double t = values[v] + (values[v + 1] - values[v]) * 0.5;
            if (!(values[v] < t && t < values[v + 1])) continue;
            double gl = 0, hl = 0, gr = 0, hr = 0;
            std::size_t nl = 0, nr = 0;
            for (const auto r : rows) {
                const auto w = weight(r);
                if (w == 0) continue;
                if (X(r, static_cast<Eigen::Index>(f)) <= t) {
                    gl += w * g[r];
                    hl += w * h[r];
                    nl += w;
                } else {
                    gr += w * g[r];
                    hr += w * h[r];
                    nr += w;
                }
            }
            if (nl < params.min_samples_leaf || nr < params.min_samples_leaf) continue;
            if (hl < crit.min_child_hess || hr < crit.min_child_hess) continue;
            if (hl + crit.lambda <= 0.0 || hr + crit.lambda <= 0.0) continue;
            const double gain = 0.5 * (gl * gl / (hl + crit.lambda) + gr * gr / (hr + crit.lambda) -
                                       (gl + gr) * (gl + gr) / (hl + hr + crit.lambda)) -
                                crit.gamma;
            if (!(gain > params.min_gain)) continue;
            if (!best || gain > best->gain) best = SplitRef{f, t, gain};
        }
    }
    return best;
}

struct RefNode {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    std::size_t n = 0;
    std::unique_ptr<RefNode> left, right;
};

inline std::unique_ptr<RefNode> grow_reference(const regkit::Matrix& X,
                                               const std::vector<std::uint32_t>& rows,
                                               const std::vector<double>& g,
                                               const std::vector<double>& h,
                                               const regkit::GrowthParams& params,
                                               const regkit::SplitCriterion& crit,
                                               std::size_t depth) {
    auto node = std::make_unique<RefNode>();
    double G = 0, H = 0;
    for (const auto r : rows) {
        G += g[r];
        H += h[r];
        ++node->n;
    }
    node->value = -G / (H + crit.lambda);
    if (depth >= params.max_depth || rows.size() < 2 * params.min_samples_leaf) return node;
    const auto split = best_split_exhaustive(X, rows, g, h, nullptr, params, crit);
    if (!split) return node;
    std::vector<std::uint32_t> left, right;
    for (const auto r : rows)
        (X(r, static_cast<Eigen::Index>(split->feature)) <= split->threshold ? left : right)
            .push_back(r);
    node->feature = static_cast<int>(split->feature);
    node->threshold = split->threshold;
    node->left = grow_reference(X, left, g, h, params, crit, depth + 1);
    node->right = grow_reference(X, right, g, h, params, crit, depth + 1);
    return node;
}

inline bool same_tree(const regkit::Tree& tree, int at, const RefNode& ref, double tol) {
    const auto& node = tree.nodes[static_cast<std::size_t>(at)];
    if (node.feature_index != ref.feature) return false;
    if (ref.feature < 0)
        return std::abs(node.value - ref.value) <= tol && node.n_samples == ref.n;
    if (std::abs(node.threshold - ref.threshold) > 0.0) return false;
    return same_tree(tree, node.left, *ref.left, tol) && same_tree(tree, node.right, *ref.right, tol);
}

// Projected gradient ascent on the epsilon-SVR dual in (alpha, alpha*)
// coordinates. The feasible set is the box [0,C]^2n intersected with
// sum(alpha - alpha*) = 0; projection shifts by nu found with bisection.
struct PgResult {
    regkit::Vector beta;
    double objective;
};

inline PgResult pg_svr(const regkit::Matrix& X, const regkit::Vector& y,
                       const regkit::KernelSpec& kernel, double C, double epsilon,
                       std::size_t iters = 400000) {
    const auto n = static_cast<std::size_t>(X.rows());
    regkit::Matrix K(n, n);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = X;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            K(i, j) = regkit::kernel_value(kernel, rows.row(static_cast<Eigen::Index>(i)).data(),
                                           rows.row(static_cast<Eigen::Index>(j)).data(),
                                           static_cast<std::size_t>(X.cols()));

    regkit::Vector a = regkit::Vector::Zero(n), as = regkit::Vector::Zero(n);
    const double step = 1.0 / (K.trace() + 1.0);
    auto clip = [&](double v) { return std::min(std::max(v, 0.0), C); };

    for (std::size_t it = 0; it < iters; ++it) {
        const regkit::Vector kb = K * (a - as);
        const regkit::Vector ga = y - kb - regkit::Vector::Constant(n, epsilon);
        const regkit::Vector gas = -y + kb - regkit::Vector::Constant(n, epsilon);

        if (it % 128 == 0) {
            double up = -std::numeric_limits<double>::infinity();
            double low = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                if (a(i) < C) up = std::max(up, ga(i));
                if (as(i) > 0) up = std::max(up, -gas(i));
                if (a(i) > 0) low = std::min(low, ga(i));
                if (as(i) < C) low = std::min(low, -gas(i));
            }
            if (up - low <= 1e-9) break;
        }

        const regkit::Vector za = a + step * ga;
        const regkit::Vector zas = as + step * gas;

        double lo = -2.0 * (C + za.cwiseAbs().maxCoeff() + zas.cwiseAbs().maxCoeff() + 1.0);
        double hi = -lo;
        for (int b = 0; b < 200; ++b) {
            const double nu = 0.5 * (lo + hi);
            double s = 0;
            for (std::size_t i = 0; i < n; ++i) s += clip(za(i) - nu) - clip(zas(i) + nu);
            (s > 0 ? lo : hi) = nu;
        }
        const double nu = 0.5 * (lo + hi);
        for (std::size_t i = 0; i < n; ++i) {
            a(i) = clip(za(i) - nu);
            as(i) = clip(zas(i) + nu);
        }
    }
    PgResult out;
    out.beta = a - as;
    out.objective = regkit::svr_dual_objective(X, y, out.beta, kernel, epsilon);
    return out;
}

}  // namespace ref
