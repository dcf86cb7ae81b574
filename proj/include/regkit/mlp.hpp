#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "regkit/common.hpp"
#include "regkit/rng.hpp"

namespace regkit {

enum class Activation { tanh_fn, logistic, relu };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::tanh_fn: return "tanh";
        case Activation::logistic: return "logistic";
        default: return "relu";
    }
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh_fn;
    if (s == "logistic") return Activation::logistic;
    if (s == "relu") return Activation::relu;
    throw Error("unknown activation '" + s + "'");
}

enum class MlpSolver { gd, lbfgs };

inline std::string to_string(MlpSolver s) { return s == MlpSolver::gd ? "gd" : "lbfgs"; }

inline MlpSolver solver_from_string(const std::string& s) {
    if (s == "gd") return MlpSolver::gd;
    if (s == "lbfgs") return MlpSolver::lbfgs;
    throw Error("unknown solver '" + s + "'");
}

struct MlpParams {
    std::vector<std::size_t> hidden_sizes{50};
    Activation activation = Activation::relu;
    double alpha = 1e-4;  // L2 penalty on weights, not biases
    std::size_t max_iter = 500;
    std::uint64_t seed = 0;
    MlpSolver solver = MlpSolver::lbfgs;
    double tol = 1e-7;  // stop when loss improvement falls below this
};

struct MlpModel {
    std::vector<Matrix> weights;  // weights[l] maps layer l's input to its output
    std::vector<Vector> biases;
    MlpParams params;
    std::vector<double> training_loss_trace;
};

struct MlpGradient {
    std::vector<Matrix> dW;
    std::vector<Vector> db;
};

namespace detail {

inline Matrix activate(const Matrix& z, Activation a) {
    switch (a) {
        case Activation::tanh_fn: return z.array().tanh().matrix();
        case Activation::logistic: return (1.0 / (1.0 + (-z.array()).exp())).matrix();
        default: return z.array().max(0.0).matrix();
    }
}

// Derivative expressed through the activation output.
inline Matrix activate_grad(const Matrix& out, Activation a) {
    switch (a) {
        case Activation::tanh_fn: return (1.0 - out.array().square()).matrix();
        case Activation::logistic: return (out.array() * (1.0 - out.array())).matrix();
        default: return (out.array() > 0.0).cast<double>().matrix();
    }
}

inline std::vector<Matrix> forward_pass(const MlpModel& model, const Matrix& X) {
    std::vector<Matrix> acts;
    acts.reserve(model.weights.size() + 1);
    acts.push_back(X);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        Matrix z = acts.back() * model.weights[l].transpose();
        z.rowwise() += model.biases[l].transpose();
        if (l + 1 < model.weights.size()) z = activate(z, model.params.activation);
        acts.push_back(std::move(z));
    }
    return acts;
}

}  // namespace detail

// h1 = phi(W1 x + b1), ..., y = W_out h_last + b_out (identity output).
inline double forward(const MlpModel& model, const Vector& x) {
    if (model.weights.empty()) throw Error("forward: empty model");
    if (model.weights.front().cols() != x.size()) throw Error("forward: dimension mismatch");
    const Matrix row = x.transpose();
    const auto acts = detail::forward_pass(model, row);
    return acts.back()(0, 0);
}

inline Vector predict_mlp(const MlpModel& model, const Matrix& X) {
    if (model.weights.empty()) throw Error("predict_mlp: empty model");
    if (model.weights.front().cols() != X.cols()) throw Error("predict_mlp: dimension mismatch");
    return detail::forward_pass(model, X).back().col(0);
}

// loss = (1/n) sum 1/2 (y_i - yhat_i)^2 + (alpha/2) sum ||W||_F^2,
// gradients by reverse accumulation through the layer stack.
inline std::pair<double, MlpGradient> loss_and_gradient(const MlpModel& model, const Matrix& X,
                                                        const Vector& y) {
    if (X.rows() != y.size()) throw Error("loss_and_gradient: row count mismatch");
    if (X.rows() == 0) throw Error("loss_and_gradient: empty batch");
    const auto n = static_cast<double>(X.rows());
    const auto acts = detail::forward_pass(model, X);
    const Vector yhat = acts.back().col(0);
    if (!yhat.allFinite()) throw Error("loss_and_gradient: non-finite forward values");

    double loss = 0.5 * (y - yhat).squaredNorm() / n;
    for (const auto& w : model.weights) loss += 0.5 * model.params.alpha * w.squaredNorm();

    MlpGradient grad;
    const std::size_t L = model.weights.size();
    grad.dW.resize(L);
    grad.db.resize(L);
    Matrix delta = (yhat - y) / n;  // n x 1
    for (std::size_t l = L; l-- > 0;) {
        grad.dW[l] = delta.transpose() * acts[l] + model.params.alpha * model.weights[l];
        grad.db[l] = delta.colwise().sum().transpose();
        if (l > 0)
            delta = (delta * model.weights[l])
                        .cwiseProduct(detail::activate_grad(acts[l], model.params.activation));
    }
    return {loss, std::move(grad)};
}

namespace detail {

struct FlatSpec {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
    Eigen::Index total = 0;
};

inline FlatSpec flat_spec(const MlpModel& model) {
    FlatSpec spec;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        spec.shapes.emplace_back(model.weights[l].rows(), model.weights[l].cols());
        spec.total += model.weights[l].size() + model.biases[l].size();
    }
    return spec;
}

inline Vector flatten(const MlpModel& model, const FlatSpec& spec) {
    Vector v(spec.total);
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const auto& w = model.weights[l];
        v.segment(at, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
        at += w.size();
        v.segment(at, model.biases[l].size()) = model.biases[l];
        at += model.biases[l].size();
    }
    return v;
}

inline void unflatten(const Vector& v, const FlatSpec& spec, MlpModel& model) {
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        auto& w = model.weights[l];
        w = Eigen::Map<const Matrix>(v.data() + at, spec.shapes[l].first, spec.shapes[l].second);
        at += w.size();
        model.biases[l] = v.segment(at, model.biases[l].size());
        at += model.biases[l].size();
    }
}

inline Vector flatten_grad(const MlpGradient& grad, const FlatSpec& spec) {
    Vector v(spec.total);
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < grad.dW.size(); ++l) {
        const auto& w = grad.dW[l];
        v.segment(at, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
        at += w.size();
        v.segment(at, grad.db[l].size()) = grad.db[l];
        at += grad.db[l].size();
    }
    return v;
}

}  // namespace detail

inline MlpModel fit_mlp(const Matrix& X, const Vector& y, const MlpParams& params) {
    if (X.rows() != y.size()) throw Error("fit_mlp: row count mismatch");
    if (X.rows() == 0) throw Error("fit_mlp: empty data");
    if (!X.allFinite() || !y.allFinite()) throw Error("fit_mlp: non-finite input");
    if (params.alpha < 0.0) throw Error("fit_mlp: alpha must be non-negative");
    for (const auto hs : params.hidden_sizes)
        if (hs == 0) throw Error("fit_mlp: zero-width hidden layer");

    MlpModel model;
    model.params = params;
    std::vector<std::size_t> sizes;
    sizes.push_back(static_cast<std::size_t>(X.cols()));
    for (const auto hs : params.hidden_sizes) sizes.push_back(hs);
    sizes.push_back(1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        Rng rng = Rng::derive(params.seed, static_cast<std::uint64_t>(l));
        const double bound = std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
        Matrix w(static_cast<Eigen::Index>(sizes[l + 1]), static_cast<Eigen::Index>(sizes[l]));
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
        model.weights.push_back(std::move(w));
        model.biases.push_back(Vector::Zero(static_cast<Eigen::Index>(sizes[l + 1])));
    }

    const auto spec = detail::flat_spec(model);
    Vector theta = detail::flatten(model, spec);
    auto eval = [&](const Vector& point, Vector& grad_out) {
        detail::unflatten(point, spec, model);
        auto [loss, grad] = loss_and_gradient(model, X, y);
        grad_out = detail::flatten_grad(grad, spec);
        return loss;
    };

    Vector grad(spec.total);
    double loss = eval(theta, grad);
    if (!std::isfinite(loss)) throw Error("fit_mlp: non-finite initial loss");
    model.training_loss_trace.push_back(loss);

    // Backtracking line search shared by both optimizers; guarantees the
    // recorded loss trace never increases. On success updates theta and
    // reports the accepted step through `step`.
    auto line_search = [&](const Vector& direction, double g_dot_d, double& step,
                           Vector& new_grad) {
        for (int back = 0; back < 60; ++back) {
            const Vector trial = theta + step * direction;
            double trial_loss;
            try {
                trial_loss = eval(trial, new_grad);
            } catch (const Error&) {
                step *= 0.5;
                continue;
            }
            if (std::isfinite(trial_loss) && trial_loss <= loss + 1e-4 * step * g_dot_d) {
                theta = trial;
                return trial_loss;
            }
            step *= 0.5;
        }
        return loss;  // no acceptable step
    };

    if (params.solver == MlpSolver::gd) {
        double last_step = 1.0;
        for (std::size_t it = 0; it < params.max_iter; ++it) {
            const Vector direction = -grad;
            const double g_dot_d = grad.dot(direction);
            if (g_dot_d >= 0.0) break;
            Vector new_grad(spec.total);
            double step = last_step * 2.0;
            const double new_loss = line_search(direction, g_dot_d, step, new_grad);
            if (new_loss >= loss) break;
            last_step = step;
            const double improvement = loss - new_loss;
            loss = new_loss;
            grad = new_grad;
            model.training_loss_trace.push_back(loss);
            if (improvement < params.tol) break;
        }
    } else {
        std::deque<Vector> s_hist, y_hist;
        std::deque<double> rho_hist;
        Vector prev_theta = theta, prev_grad = grad;
        for (std::size_t it = 0; it < params.max_iter; ++it) {
            // Two-loop recursion for the quasi-Newton direction.
            Vector q = grad;
            std::vector<double> alpha_coef(s_hist.size());
            for (std::size_t i = s_hist.size(); i-- > 0;) {
                alpha_coef[i] = rho_hist[i] * s_hist[i].dot(q);
                q -= alpha_coef[i] * y_hist[i];
            }
            if (!s_hist.empty()) {
                const double gamma =
                    s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
                q *= gamma;
            }
            for (std::size_t i = 0; i < s_hist.size(); ++i) {
                const double beta = rho_hist[i] * y_hist[i].dot(q);
                q += (alpha_coef[i] - beta) * s_hist[i];
            }
            Vector direction = -q;
            double g_dot_d = grad.dot(direction);
            if (g_dot_d >= 0.0) {
                direction = -grad;
                g_dot_d = grad.dot(direction);
                if (g_dot_d >= 0.0) break;
            }
            prev_theta = theta;
            prev_grad = grad;
            Vector new_grad(spec.total);
            double step = 1.0;
            const double new_loss = line_search(direction, g_dot_d, step, new_grad);
            if (new_loss >= loss) break;
            const Vector s = theta - prev_theta;
            const Vector yv = new_grad - prev_grad;
            const double sy = s.dot(yv);
            if (sy > 1e-12) {
                s_hist.push_back(s);
                y_hist.push_back(yv);
                rho_hist.push_back(1.0 / sy);
                if (s_hist.size() > 10) {
                    s_hist.pop_front();
                    y_hist.pop_front();
                    rho_hist.pop_front();
                }
            }
            const double improvement = loss - new_loss;
            loss = new_loss;
            grad = new_grad;
            model.training_loss_trace.push_back(loss);
            if (improvement < params.tol) break;
        }
    }

    detail::unflatten(theta, spec, model);
    return model;
}

}  // namespace regkit
