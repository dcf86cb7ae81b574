#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "regkit/common.hpp"

namespace regkit {

struct Metrics {
    double r2 = 0.0;
    double adj_r2 = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
};

namespace detail {

inline void check_pair(const Vector& y_true, const Vector& y_pred) {
    if (y_true.size() != y_pred.size()) throw Error("metrics: length mismatch");
    if (y_true.size() == 0) throw Error("metrics: empty input");
    if (!y_true.allFinite() || !y_pred.allFinite()) throw Error("metrics: non-finite values");
}

}  // namespace detail

inline double mse(const Vector& y_true, const Vector& y_pred) {
    detail::check_pair(y_true, y_pred);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y_true.size(); ++i) {
        const double e = y_true(i) - y_pred(i);
        acc += e * e;
    }
    return acc / static_cast<double>(y_true.size());
}

inline double rmse(const Vector& y_true, const Vector& y_pred) {
    return std::sqrt(mse(y_true, y_pred));
}

inline double mae(const Vector& y_true, const Vector& y_pred) {
    detail::check_pair(y_true, y_pred);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y_true.size(); ++i) acc += std::abs(y_true(i) - y_pred(i));
    return acc / static_cast<double>(y_true.size());
}

// 1 - SSR/SSM with SSM about the mean of y_true. Constant targets make the
// ratio undefined, which is an error rather than a sentinel.
inline double r2_score(const Vector& y_true, const Vector& y_pred) {
    detail::check_pair(y_true, y_pred);
    const double mean = y_true.mean();
    double ssr = 0.0, ssm = 0.0;
    for (Eigen::Index i = 0; i < y_true.size(); ++i) {
        const double e = y_true(i) - y_pred(i);
        const double m = y_true(i) - mean;
        ssr += e * e;
        ssm += m * m;
    }
    if (ssm == 0.0) throw Error("r2_score: constant targets make R^2 undefined");
    return 1.0 - ssr / ssm;
}

// 1 - (1-R^2)(n-1)/(n-k-1) where k counts predictors.
inline double adjusted_r2(double r2, std::size_t n, std::size_t k) {
    if (n < 2) throw Error("adjusted_r2: need n >= 2");
    if (n <= k + 1) throw Error("adjusted_r2: need n > k + 1");
    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    return 1.0 - (1.0 - r2) * (nn - 1.0) / (nn - kk - 1.0);
}

inline Metrics compute_metrics(const Vector& y_true, const Vector& y_pred, std::size_t k) {
    Metrics m;
    m.r2 = r2_score(y_true, y_pred);
    m.adj_r2 = adjusted_r2(m.r2, static_cast<std::size_t>(y_true.size()), k);
    m.mse = mse(y_true, y_pred);
    m.rmse = std::sqrt(m.mse);
    m.mae = mae(y_true, y_pred);
    return m;
}

}  // namespace regkit
