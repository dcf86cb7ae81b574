#pragma once

#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "regkit/common.hpp"
#include "regkit/csv.hpp"
#include "regkit/dataset.hpp"
#include "regkit/forest.hpp"
#include "regkit/gbdt.hpp"
#include "regkit/linreg.hpp"
#include "regkit/mlp.hpp"
#include "regkit/rng.hpp"
#include "regkit/select.hpp"
#include "regkit/svr.hpp"

namespace regkit {

enum class ModelKind { linreg, mlp, forest, svr, boost };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::linreg: return "linreg";
        case ModelKind::mlp: return "mlp";
        case ModelKind::forest: return "forest";
        case ModelKind::svr: return "svr";
        default: return "boost";
    }
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "linreg") return ModelKind::linreg;
    if (s == "mlp") return ModelKind::mlp;
    if (s == "forest") return ModelKind::forest;
    if (s == "svr") return ModelKind::svr;
    if (s == "boost") return ModelKind::boost;
    throw Error("unknown model kind '" + s + "'");
}

// Inputs to svr and mlp are standardized; the tree models and linreg see
// raw encoded features.
inline bool needs_scaling(ModelKind k) { return k == ModelKind::svr || k == ModelKind::mlp; }

struct LinregParams {};

using AnyParams = std::variant<LinregParams, MlpParams, ForestParams, SvrParams, BoostParams>;

inline ModelKind kind_of(const AnyParams& p) {
    switch (p.index()) {
        case 0: return ModelKind::linreg;
        case 1: return ModelKind::mlp;
        case 2: return ModelKind::forest;
        case 3: return ModelKind::svr;
        default: return ModelKind::boost;
    }
}

namespace detail {

inline double kv_double(const std::string& key, const std::string& value) {
    double out;
    if (!parse_number(value, out)) throw Error("parameter '" + key + "': bad number '" + value + "'");
    return out;
}

inline std::size_t kv_count(const std::string& key, const std::string& value) {
    const double d = kv_double(key, value);
    if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d)))
        throw Error("parameter '" + key + "': expected a non-negative integer, got '" + value + "'");
    return static_cast<std::size_t>(d);
}

inline bool kv_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw Error("parameter '" + key + "': expected true/false, got '" + value + "'");
}

inline std::vector<std::size_t> kv_sizes(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::size_t at = 0;
    while (at <= value.size()) {
        const auto comma = value.find(',', at);
        const std::string part =
            value.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
        out.push_back(kv_count(key, part));
        if (comma == std::string::npos) break;
        at = comma + 1;
    }
    if (out.empty()) throw Error("parameter '" + key + "': empty size list");
    return out;
}

}  // namespace detail

// Builds typed parameters from text key/value pairs (config sections,
// search assignments). Later occurrences of a key override earlier ones;
// unknown keys are errors. Seeds not set explicitly derive from the master
// seed so each model kind gets its own stream.
inline AnyParams make_params(ModelKind kind,
                             const std::vector<std::pair<std::string, std::string>>& kvs,
                             std::uint64_t master_seed) {
    using detail::kv_bool;
    using detail::kv_count;
    using detail::kv_double;
    using detail::kv_sizes;
    switch (kind) {
        case ModelKind::linreg: {
            for (const auto& [k, v] : kvs) throw Error("linreg takes no parameter '" + k + "'");
            return LinregParams{};
        }
        case ModelKind::forest: {
            ForestParams p;
            p.seed = Rng::derive_seed(master_seed, 0x10f0);
            for (const auto& [k, v] : kvs) {
                if (k == "n_estimators") p.n_estimators = kv_count(k, v);
                else if (k == "max_depth") p.growth.max_depth = kv_count(k, v);
                else if (k == "min_samples_leaf") p.growth.min_samples_leaf = kv_count(k, v);
                else if (k == "max_features") p.growth.max_features = kv_count(k, v);
                else if (k == "min_gain") p.growth.min_gain = kv_double(k, v);
                else if (k == "bootstrap") p.bootstrap = kv_bool(k, v);
                else if (k == "seed") p.seed = kv_count(k, v);
                else throw Error("forest: unknown parameter '" + k + "'");
            }
            return p;
        }
        case ModelKind::boost: {
            BoostParams p;
            p.seed = Rng::derive_seed(master_seed, 0x600d);
            for (const auto& [k, v] : kvs) {
                if (k == "n_rounds") p.n_rounds = kv_count(k, v);
                else if (k == "learning_rate") p.learning_rate = kv_double(k, v);
                else if (k == "lambda") p.lambda = kv_double(k, v);
                else if (k == "gamma") p.gamma = kv_double(k, v);
                else if (k == "max_depth") p.max_depth = kv_count(k, v);
                else if (k == "min_child_weight") p.min_child_weight = kv_double(k, v);
                else if (k == "subsample") p.subsample = kv_double(k, v);
                else if (k == "base_score") {
                    if (v == "mean") p.base_score.reset();
                    else p.base_score = kv_double(k, v);
                } else if (k == "seed") p.seed = kv_count(k, v);
                else throw Error("boost: unknown parameter '" + k + "'");
            }
            return p;
        }
        case ModelKind::svr: {
            SvrParams p;
            for (const auto& [k, v] : kvs) {
                if (k == "C") p.C = kv_double(k, v);
                else if (k == "epsilon") p.epsilon = kv_double(k, v);
                else if (k == "kernel") {
                    if (v == "linear") p.kernel.kind = KernelKind::linear;
                    else if (v == "rbf") p.kernel.kind = KernelKind::rbf;
                    else throw Error("svr: unknown kernel '" + v + "'");
                } else if (k == "gamma") p.kernel.gamma = kv_double(k, v);
                else if (k == "tol") p.tol = kv_double(k, v);
                else if (k == "max_passes") p.max_passes = kv_count(k, v);
                else throw Error("svr: unknown parameter '" + k + "'");
            }
            return p;
        }
        case ModelKind::mlp: {
            MlpParams p;
            p.seed = Rng::derive_seed(master_seed, 0x3317);
            for (const auto& [k, v] : kvs) {
                if (k == "hidden_sizes") p.hidden_sizes = kv_sizes(k, v);
                else if (k == "activation") p.activation = activation_from_string(v);
                else if (k == "alpha") p.alpha = kv_double(k, v);
                else if (k == "max_iter") p.max_iter = kv_count(k, v);
                else if (k == "solver") p.solver = solver_from_string(v);
                else if (k == "tol") p.tol = kv_double(k, v);
                else if (k == "seed") p.seed = kv_count(k, v);
                else throw Error("mlp: unknown parameter '" + k + "'");
            }
            return p;
        }
    }
    throw Error("make_params: unreachable");
}

struct AnyModel {
    AnyParams params;
    std::variant<LinearModel, MlpModel, ForestModel, SvrModel, BoostModel> model;
    bool scaled = false;
    Scaler scaler;  // meaningful only when scaled

    ModelKind kind() const {
        switch (model.index()) {
            case 0: return ModelKind::linreg;
            case 1: return ModelKind::mlp;
            case 2: return ModelKind::forest;
            case 3: return ModelKind::svr;
            default: return ModelKind::boost;
        }
    }
};

inline AnyModel fit_any(const AnyParams& params, const Matrix& X, const Vector& y) {
    AnyModel out;
    out.params = params;
    const ModelKind kind = kind_of(params);
    const Matrix* Xp = &X;
    Matrix scaled_storage;
    if (needs_scaling(kind)) {
        out.scaled = true;
        out.scaler = fit_scaler(X);
        scaled_storage = apply_scaler(out.scaler, X);
        Xp = &scaled_storage;
    }
    switch (kind) {
        case ModelKind::linreg: out.model = fit_linreg(*Xp, y); break;
        case ModelKind::mlp: out.model = fit_mlp(*Xp, y, std::get<MlpParams>(params)); break;
        case ModelKind::forest: out.model = fit_forest(*Xp, y, std::get<ForestParams>(params)); break;
        case ModelKind::svr: out.model = fit_svr(*Xp, y, std::get<SvrParams>(params)); break;
        case ModelKind::boost: out.model = fit_boost(*Xp, y, std::get<BoostParams>(params)); break;
    }
    return out;
}

inline Vector predict_any(const AnyModel& m, const Matrix& X) {
    const Matrix* Xp = &X;
    Matrix scaled_storage;
    if (m.scaled) {
        scaled_storage = apply_scaler(m.scaler, X);
        Xp = &scaled_storage;
    }
    switch (m.model.index()) {
        case 0: return predict_linreg(std::get<LinearModel>(m.model), *Xp);
        case 1: return predict_mlp(std::get<MlpModel>(m.model), *Xp);
        case 2: return predict_forest_batch(std::get<ForestModel>(m.model), *Xp);
        case 3: return predict_svr_batch(std::get<SvrModel>(m.model), *Xp);
        default: return predict_boost_batch(std::get<BoostModel>(m.model), *Xp);
    }
}

inline TrainFn make_train_fn(const AnyParams& params) {
    return [params](const Matrix& X, const Vector& y) -> Predictor {
        auto fitted = std::make_shared<AnyModel>(fit_any(params, X, y));
        return [fitted](const Matrix& Xq) { return predict_any(*fitted, Xq); };
    };
}

// Search family: assignments extend the model's base configuration, so a
// grid only has to mention the axes it varies.
inline ModelFamily make_family(ModelKind kind,
                               std::vector<std::pair<std::string, std::string>> base_kvs,
                               std::uint64_t master_seed) {
    return [kind, base_kvs = std::move(base_kvs), master_seed](const ParamAssignment& assignment) {
        auto kvs = base_kvs;
        kvs.insert(kvs.end(), assignment.begin(), assignment.end());
        return make_train_fn(make_params(kind, kvs, master_seed));
    };
}

}  // namespace regkit
