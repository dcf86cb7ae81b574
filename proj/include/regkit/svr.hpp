#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "regkit/common.hpp"

namespace regkit {

enum class KernelKind { linear, rbf };

struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double gamma = 0.1;  // rbf only
};

inline double kernel_value(const KernelSpec& k, const double* a, const double* b,
                           std::size_t dim) {
    if (k.kind == KernelKind::linear) {
        double dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) dot += a[i] * b[i];
        return dot;
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::exp(-k.gamma * sq);
}

struct SvrParams {
    double C = 1.0;
    double epsilon = 0.1;
    KernelSpec kernel;
    double tol = 1e-3;
    std::size_t max_passes = 200000;  // cap on pairwise updates
};

struct SvrDiagnostics {
    bool converged = false;
    std::size_t updates = 0;
    double final_gap = 0.0;  // max KKT violation at exit
    std::string termination;
    std::vector<double> objective_trace;  // dual objective after each update
};

struct SvrModel {
    Matrix support_rows;
    Vector dual_coefs;  // alpha_i - alpha_i*, nonzero, within [-C, C]
    double bias = 0.0;
    KernelSpec kernel;
    SvrParams params;
    SvrDiagnostics diagnostics;
};

// Dual of the epsilon-insensitive problem, optimized by repeatedly picking
// the maximal violating coordinate pair and solving the two-variable
// subproblem exactly. Respects the sum-zero constraint by transferring mass
// t between the two chosen rows' coefficients.
inline SvrModel fit_svr(const Matrix& X, const Vector& y, const SvrParams& params) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (n < 2) throw Error("fit_svr: need at least 2 rows");
    if (X.rows() != y.size()) throw Error("fit_svr: row count mismatch");
    if (!X.allFinite() || !y.allFinite()) throw Error("fit_svr: non-finite input");
    if (!(params.C > 0.0)) throw Error("fit_svr: C must be positive");
    if (params.epsilon < 0.0) throw Error("fit_svr: epsilon must be non-negative");
    if (!(params.tol > 0.0)) throw Error("fit_svr: tol must be positive");
    if (params.kernel.kind == KernelKind::rbf && !(params.kernel.gamma > 0.0))
        throw Error("fit_svr: rbf gamma must be positive");

    Matrix K;
    if (params.kernel.kind == KernelKind::linear) {
        K = X * X.transpose();
    } else {
        const Vector sq = X.rowwise().squaredNorm();
        K = -2.0 * (X * X.transpose());
        K.colwise() += sq;
        K.rowwise() += sq.transpose();
        K = (-params.kernel.gamma * K.array()).exp();
    }

    const double C = params.C;
    const double eps = params.epsilon;
    std::vector<double> alpha(n, 0.0), alpha_star(n, 0.0);
    Vector beta = Vector::Zero(static_cast<Eigen::Index>(n));
    Vector k_beta = Vector::Zero(static_cast<Eigen::Index>(n));

    auto objective = [&]() {
        double w = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double b = beta(static_cast<Eigen::Index>(r));
            w += b * (y(static_cast<Eigen::Index>(r)) - 0.5 * k_beta(static_cast<Eigen::Index>(r))) -
                 eps * std::abs(b);
        }
        return w;
    };

    SvrModel model;
    model.kernel = params.kernel;
    model.params = params;
    auto& diag = model.diagnostics;

    double m_up = 0.0, m_low = 0.0;
    while (true) {
        // -gradient of each coordinate: u - eps for the alpha side,
        // u + eps for the alpha* side, with u = y - K beta.
        m_up = -std::numeric_limits<double>::infinity();
        m_low = std::numeric_limits<double>::infinity();
        std::size_t p = 0, q = 0;
        bool p_star = false, q_star = false;
        for (std::size_t r = 0; r < n; ++r) {
            const double u = y(static_cast<Eigen::Index>(r)) - k_beta(static_cast<Eigen::Index>(r));
            if (alpha[r] < C && u - eps > m_up) m_up = u - eps, p = r, p_star = false;
            if (alpha_star[r] > 0.0 && u + eps > m_up) m_up = u + eps, p = r, p_star = true;
            if (alpha[r] > 0.0 && u - eps < m_low) m_low = u - eps, q = r, q_star = false;
            if (alpha_star[r] < C && u + eps < m_low) m_low = u + eps, q = r, q_star = true;
        }
        if (m_up - m_low <= params.tol) {
            diag.converged = true;
            diag.termination = "converged";
            break;
        }
        if (diag.updates >= params.max_passes) {
            diag.termination = "max_passes";
            break;
        }

        // Increasing t raises beta_p by t and lowers beta_q by t.
        const double eta = K(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) +
                           K(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q)) -
                           2.0 * K(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
        double t_box = p_star ? alpha_star[p] : C - alpha[p];
        t_box = std::min(t_box, q_star ? C - alpha_star[q] : alpha[q]);
        double t = eta > 1e-12 ? (m_up - m_low) / eta : t_box;
        t = std::min(t, t_box);
        if (t <= 0.0) {
            diag.termination = "stalled";
            break;
        }

        if (p_star) alpha_star[p] -= t;
        else alpha[p] += t;
        if (q_star) alpha_star[q] += t;
        else alpha[q] -= t;
        beta(static_cast<Eigen::Index>(p)) += t;
        beta(static_cast<Eigen::Index>(q)) -= t;
        k_beta += t * (K.col(static_cast<Eigen::Index>(p)) - K.col(static_cast<Eigen::Index>(q)));
        ++diag.updates;
        diag.objective_trace.push_back(objective());
    }
    diag.final_gap = m_up - m_low;

    // Bias from free coefficients when any exist, else the midpoint of the
    // interval the KKT bounds leave for it.
    double b_sum = 0.0;
    std::size_t b_count = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const double u = y(static_cast<Eigen::Index>(r)) - k_beta(static_cast<Eigen::Index>(r));
        if (alpha[r] > 0.0 && alpha[r] < C) b_sum += u - eps, ++b_count;
        if (alpha_star[r] > 0.0 && alpha_star[r] < C) b_sum += u + eps, ++b_count;
    }
    model.bias = b_count > 0 ? b_sum / static_cast<double>(b_count) : 0.5 * (m_up + m_low);

    std::vector<std::size_t> support;
    for (std::size_t r = 0; r < n; ++r)
        if (beta(static_cast<Eigen::Index>(r)) != 0.0) support.push_back(r);
    model.support_rows.resize(static_cast<Eigen::Index>(support.size()), X.cols());
    model.dual_coefs.resize(static_cast<Eigen::Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) {
        model.support_rows.row(static_cast<Eigen::Index>(i)) =
            X.row(static_cast<Eigen::Index>(support[i]));
        model.dual_coefs(static_cast<Eigen::Index>(i)) =
            beta(static_cast<Eigen::Index>(support[i]));
    }
    return model;
}

inline double predict_svr(const SvrModel& model, const double* x, std::size_t dim) {
    if (model.support_rows.cols() != static_cast<Eigen::Index>(dim) &&
        model.support_rows.rows() > 0)
        throw Error("predict_svr: dimension mismatch");
    double acc = model.bias;
    Vector row(model.support_rows.cols());
    for (Eigen::Index i = 0; i < model.support_rows.rows(); ++i) {
        row = model.support_rows.row(i);
        acc += model.dual_coefs(i) *
               kernel_value(model.kernel, row.data(), x, static_cast<std::size_t>(row.size()));
    }
    return acc;
}

inline double predict_svr(const SvrModel& model, const Vector& x) {
    return predict_svr(model, x.data(), static_cast<std::size_t>(x.size()));
}

inline Vector predict_svr_batch(const SvrModel& model, const Matrix& X) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = X;
    Vector out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out(i) = predict_svr(model, rows.row(i).data(), static_cast<std::size_t>(X.cols()));
    return out;
}

// Maximization-form dual value for a coefficient vector on given data;
// shared by diagnostics and tests.
inline double svr_dual_objective(const Matrix& X, const Vector& y, const Vector& beta,
                                 const KernelSpec& kernel, double epsilon) {
    if (X.rows() != beta.size() || X.rows() != y.size())
        throw Error("svr_dual_objective: size mismatch");
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = X;
    double w = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double kb = 0.0;
        for (Eigen::Index j = 0; j < X.rows(); ++j)
            kb += kernel_value(kernel, rows.row(i).data(), rows.row(j).data(),
                               static_cast<std::size_t>(X.cols())) *
                  beta(j);
        w += beta(i) * (y(i) - 0.5 * kb) - epsilon * std::abs(beta(i));
    }
    return w;
}

}  // namespace regkit
