#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "regkit/artifact.hpp"
#include "regkit/common.hpp"
#include "regkit/csv.hpp"
#include "regkit/dataset.hpp"
#include "regkit/kvfile.hpp"
#include "regkit/metrics.hpp"
#include "regkit/model.hpp"
#include "regkit/report.hpp"
#include "regkit/schema.hpp"
#include "regkit/select.hpp"

namespace regkit {

using ParamKvs = std::vector<std::pair<std::string, std::string>>;

struct ExperimentConfig {
    std::string data_path;
    std::string schema_path;
    TargetTransform transform = TargetTransform::log1p;
    double test_fraction = 0.2;
    std::uint64_t seed = 42;
    std::size_t folds = 5;
    std::vector<ModelKind> models{ModelKind::linreg, ModelKind::mlp, ModelKind::forest,
                                  ModelKind::svr, ModelKind::boost};
    std::map<ModelKind, ParamKvs> model_params;
    std::map<ModelKind, ParamGrid> grids;
    std::string out_dir = "out";
    double drift_threshold = 2.0;
};

inline std::vector<ModelKind> parse_model_list(const std::string& text) {
    std::vector<ModelKind> out;
    for (const auto& part : detail::split(text, ',')) {
        const std::string name = detail::trim(part);
        if (name.empty()) continue;
        out.push_back(model_kind_from_string(name));
    }
    if (out.empty()) throw Error("empty model list");
    return out;
}

inline ExperimentConfig parse_experiment_config(const std::vector<KvSection>& sections,
                                                const std::string& origin) {
    ExperimentConfig config;
    bool saw_experiment = false;
    for (const auto& section : sections) {
        if (section.name == "experiment") {
            saw_experiment = true;
            for (const auto& [key, value] : section.entries) {
                if (key == "data") config.data_path = value;
                else if (key == "schema") config.schema_path = value;
                else if (key == "target_transform") config.transform = target_transform_from_string(value);
                else if (key == "test_fraction") config.test_fraction = detail::kv_double(key, value);
                else if (key == "seed") config.seed = detail::kv_count(key, value);
                else if (key == "folds") config.folds = detail::kv_count(key, value);
                else if (key == "models") config.models = parse_model_list(value);
                else if (key == "out") config.out_dir = value;
                else if (key == "drift_threshold") config.drift_threshold = detail::kv_double(key, value);
                else throw Error(origin + ": unknown experiment key '" + key + "'");
            }
        } else if (section.name.rfind("model:", 0) == 0) {
            const ModelKind kind = model_kind_from_string(section.name.substr(6));
            auto& kvs = config.model_params[kind];
            kvs.insert(kvs.end(), section.entries.begin(), section.entries.end());
            make_params(kind, kvs, 0);  // fail fast on typos
        } else if (section.name.rfind("grid:", 0) == 0) {
            const ModelKind kind = model_kind_from_string(section.name.substr(5));
            auto& grid = config.grids[kind];
            for (const auto& [key, value] : section.entries) {
                std::vector<std::string> values;
                for (const auto& v : detail::split(value, '|')) {
                    const std::string t = detail::trim(v);
                    if (t.empty()) throw Error(origin + ": empty grid value for '" + key + "'");
                    values.push_back(t);
                }
                grid.axes.emplace_back(key, std::move(values));
            }
        } else {
            throw Error(origin + ": unknown section [" + section.name + "]");
        }
    }
    if (!saw_experiment) throw Error(origin + ": missing [experiment] section");
    if (config.data_path.empty()) throw Error(origin + ": experiment.data is required");
    if (config.schema_path.empty()) throw Error(origin + ": experiment.schema is required");
    return config;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(load_kv_file(path), path);
}

struct PreparedData {
    Schema schema;
    std::string schema_digest;
    ValidationReport validation;
    RawTable cleaned;
    CleanStats clean_stats;
    EncoderState encoder;
    Dataset full;
    Dataset train;
    Dataset test;
};

// ingest -> validate -> clean -> encode -> split, with the failing stage
// named in any error.
inline PreparedData prepare_data(const ExperimentConfig& config) {
    PreparedData prep;
    auto stage = [](const std::string& name, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            throw Error("stage " + name + ": " + e.what());
        }
    };
    prep.schema = stage("ingest", [&] { return load_schema(config.schema_path); });
    prep.schema_digest = fnv1a64_hex(schema_to_text(prep.schema));
    const RawTable raw =
        stage("ingest", [&] { return load_csv(config.data_path, prep.schema); });
    prep.validation = stage("validate", [&] { return validate(raw, prep.schema); });
    if (!prep.validation.pass)
        throw Error("stage validate: mandatory checks failed\n" + prep.validation.to_text());
    prep.cleaned =
        stage("clean", [&] { return clean_with_stats(raw, prep.schema, prep.clean_stats); });
    prep.full = stage("encode", [&] {
        return encode_with_state(prep.cleaned, prep.schema, config.transform, prep.encoder);
    });
    stage("split", [&] {
        auto [train, test] = train_test_split(prep.full, config.test_fraction, config.seed);
        prep.train = std::move(train);
        prep.test = std::move(test);
        return 0;
    });
    return prep;
}

inline std::string assignment_text(const ParamKvs& kvs) {
    if (kvs.empty()) return "defaults";
    std::string out;
    for (std::size_t i = 0; i < kvs.size(); ++i) {
        if (i) out += ", ";
        out += kvs[i].first + "=" + kvs[i].second;
    }
    return out;
}

struct ModelOutcome {
    ReportRow row;
    PlotData plot;
    ModelArtifact artifact;
};

namespace detail {

inline PreprocessRecord make_preprocess_record(const PreparedData& prep,
                                               const ExperimentConfig& config,
                                               const AnyModel& fitted) {
    PreprocessRecord rec;
    rec.schema_digest = prep.schema_digest;
    rec.transform = config.transform;
    rec.column_names = prep.cleaned.column_names;
    rec.impute_values = prep.clean_stats.impute_values;
    rec.categories = prep.encoder.categories;
    rec.feature_names = prep.full.feature_names;
    rec.scaled = fitted.scaled;
    if (fitted.scaled) rec.scaler = fitted.scaler;
    return rec;
}

inline ModelOutcome run_one_model(ModelKind kind, const ParamKvs& kvs, const std::string& setup,
                                  const PreparedData& prep, const ExperimentConfig& config,
                                  const FoldPlan& plan) {
    ModelOutcome out;
    out.row.model = to_string(kind);
    out.row.setup = setup;
    try {
        const AnyParams params = make_params(kind, kvs, config.seed);
        const AnyModel fitted = fit_any(params, prep.train.X, prep.train.y);
        const Vector pred_train = predict_any(fitted, prep.train.X);
        const Vector pred_test = predict_any(fitted, prep.test.X);
        out.row.model_score = r2_score(prep.train.y, pred_train);
        const Metrics test_metrics = compute_metrics(prep.test.y, pred_test, prep.test.d());
        out.row.r2 = test_metrics.r2;
        out.row.adj_r2 = test_metrics.adj_r2;
        out.row.mse = test_metrics.mse;
        out.row.rmse = test_metrics.rmse;
        out.row.mae = test_metrics.mae;
        const CvResult cv = cross_validate(make_train_fn(params), prep.train.X, prep.train.y, plan);
        out.row.cv_score = cv.cv_score;
        if (!cv.excluded_folds.empty()) {
            out.row.note = "excluded folds:";
            for (const auto f : cv.excluded_folds) out.row.note += " " + std::to_string(f);
        }
        if (kind == ModelKind::svr) {
            const auto& diag = std::get<SvrModel>(fitted.model).diagnostics;
            if (!diag.converged) {
                if (!out.row.note.empty()) out.row.note += "; ";
                out.row.note += "solver stopped: " + diag.termination + " after " +
                                std::to_string(diag.updates) + " updates";
            }
        }
        out.plot = make_plot_data(prep.test.y, pred_test);
        out.artifact.kind = kind;
        out.artifact.preprocess = make_preprocess_record(prep, config, fitted);
        out.artifact.model = fitted;
        out.artifact.meta.seed = config.seed;
        out.artifact.meta.setup = setup;
        out.artifact.meta.model_score = out.row.model_score;
        out.artifact.meta.r2 = out.row.r2;
        out.artifact.meta.adj_r2 = out.row.adj_r2;
        out.artifact.meta.mse = out.row.mse;
        out.artifact.meta.rmse = out.row.rmse;
        out.artifact.meta.mae = out.row.mae;
        out.artifact.meta.cv_score = out.row.cv_score;
    } catch (const Error& e) {
        out.row.failed = true;
        out.row.note = e.what();
    }
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline nlohmann::json run_context(const ExperimentConfig& config, const PreparedData& prep) {
    nlohmann::json ctx;
    ctx["data"] = config.data_path;
    ctx["schema"] = config.schema_path;
    ctx["schema_digest"] = prep.schema_digest;
    ctx["target_transform"] = to_string(config.transform);
    ctx["test_fraction"] = config.test_fraction;
    ctx["seed"] = config.seed;
    ctx["folds"] = config.folds;
    ctx["n_train"] = prep.train.n();
    ctx["n_test"] = prep.test.n();
    ctx["n_features"] = prep.full.d();
    ctx["duplicates_removed"] = prep.clean_stats.duplicates_removed;
    ctx["rows_dropped"] = prep.clean_stats.rows_dropped;
    return ctx;
}

}  // namespace detail

struct ExperimentResult {
    PreparedData data;
    RunReport report;
    std::map<ModelKind, PlotData> plots;
    std::map<ModelKind, ModelArtifact> artifacts;
    std::map<ModelKind, SearchResult> searches;
};

// Default-parameter pipeline over every enabled model. write_artifacts
// distinguishes `train` (persists models) from `evaluate` (report only);
// with an empty out_dir nothing is written at all.
inline ExperimentResult run_experiment(const ExperimentConfig& config,
                                       bool write_artifacts = true) {
    ExperimentResult result;
    result.data = prepare_data(config);
    const FoldPlan plan = kfold_plan(result.data.train.n(), config.folds, config.seed);

    for (const auto kind : config.models) {
        ParamKvs kvs;
        if (const auto it = config.model_params.find(kind); it != config.model_params.end())
            kvs = it->second;
        ModelOutcome outcome =
            detail::run_one_model(kind, kvs, assignment_text(kvs), result.data, config, plan);
        if (!outcome.row.failed) {
            result.plots[kind] = std::move(outcome.plot);
            result.artifacts[kind] = std::move(outcome.artifact);
        }
        result.report.rows.push_back(std::move(outcome.row));
    }
    result.report.context = detail::run_context(config, result.data);
    result.report.context["mode"] = "default";

    if (!config.out_dir.empty()) {
        const std::filesystem::path out(config.out_dir);
        std::filesystem::create_directories(out);
        detail::write_text_file(out / "report.json", report_to_json(result.report).dump(2) + "\n");
        detail::write_text_file(out / "report.txt", report_to_text(result.report));
        for (const auto& [kind, plot] : result.plots) {
            detail::write_text_file(out / ("scatter_" + to_string(kind) + ".txt"),
                                    scatter_to_text(plot));
            detail::write_text_file(out / ("residual_hist_" + to_string(kind) + ".txt"),
                                    histogram_to_text(plot));
        }
        if (const auto it = result.artifacts.find(ModelKind::boost); it != result.artifacts.end()) {
            const auto& boost = std::get<BoostModel>(it->second.model.model);
            const auto ranked = export_importance(boost, result.data.full.feature_names,
                                                  result.data.full.feature_names.size());
            detail::write_text_file(out / "importance_boost.txt", importance_to_text(ranked));
        }
        if (write_artifacts)
            for (const auto& [kind, artifact] : result.artifacts)
                save_model(artifact, (out / ("model_" + to_string(kind) + ".bin")).string());
    }
    return result;
}

// Grid search per model on the training partition (same fold plan as the
// default run), then a refit of each winner. Models without a grid are
// evaluated as a singleton default configuration.
inline ExperimentResult tune_and_run(const ExperimentConfig& config, bool write_artifacts = true) {
    ExperimentResult result;
    result.data = prepare_data(config);
    const FoldPlan plan = kfold_plan(result.data.train.n(), config.folds, config.seed);

    for (const auto kind : config.models) {
        ParamKvs base;
        if (const auto it = config.model_params.find(kind); it != config.model_params.end())
            base = it->second;
        const ModelFamily family = make_family(kind, base, config.seed);

        ReportRow failed_row;
        failed_row.model = to_string(kind);
        try {
            SearchResult search;
            if (const auto it = config.grids.find(kind);
                it != config.grids.end() && !it->second.axes.empty()) {
                search = grid_search(family, it->second, result.data.train.X, result.data.train.y,
                                     plan);
            } else {
                search = evaluate_configs(family, {ParamAssignment{}}, result.data.train.X,
                                          result.data.train.y, plan);
            }
            ParamKvs winner = base;
            winner.insert(winner.end(), search.best_config.begin(), search.best_config.end());
            const std::string setup = assignment_text(search.best_config);
            ModelOutcome outcome =
                detail::run_one_model(kind, winner, setup, result.data, config, plan);
            result.searches[kind] = std::move(search);
            if (!outcome.row.failed) {
                result.plots[kind] = std::move(outcome.plot);
                result.artifacts[kind] = std::move(outcome.artifact);
            }
            result.report.rows.push_back(std::move(outcome.row));
        } catch (const Error& e) {
            failed_row.failed = true;
            failed_row.setup = "search failed";
            failed_row.note = e.what();
            result.report.rows.push_back(std::move(failed_row));
        }
    }
    result.report.context = detail::run_context(config, result.data);
    result.report.context["mode"] = "tuned";

    if (!config.out_dir.empty()) {
        const std::filesystem::path out(config.out_dir);
        std::filesystem::create_directories(out);
        detail::write_text_file(out / "tuned_report.json",
                                report_to_json(result.report).dump(2) + "\n");
        detail::write_text_file(out / "tuned_report.txt", report_to_text(result.report));
        for (const auto& [kind, search] : result.searches)
            detail::write_text_file(out / ("search_" + to_string(kind) + ".txt"),
                                    search_to_text(search));
        for (const auto& [kind, plot] : result.plots) {
            detail::write_text_file(out / ("scatter_" + to_string(kind) + "_tuned.txt"),
                                    scatter_to_text(plot));
            detail::write_text_file(out / ("residual_hist_" + to_string(kind) + "_tuned.txt"),
                                    histogram_to_text(plot));
        }
        if (const auto it = result.artifacts.find(ModelKind::boost); it != result.artifacts.end()) {
            const auto& boost = std::get<BoostModel>(it->second.model.model);
            const auto ranked = export_importance(boost, result.data.full.feature_names,
                                                  result.data.full.feature_names.size());
            detail::write_text_file(out / "importance_boost_tuned.txt", importance_to_text(ranked));
        }
        if (write_artifacts)
            for (const auto& [kind, artifact] : result.artifacts)
                save_model(artifact, (out / ("model_" + to_string(kind) + "_tuned.bin")).string());
    }
    return result;
}

struct BatchPrediction {
    Vector transformed;  // model-space values
    Vector original;     // after inverse target transform
    std::vector<std::string> warnings;
};

// Replays the artifact's stored preprocessing on new rows. The input table
// may omit the target column; unseen categories one-hot to all zeros with a
// warning per occurrence.
inline BatchPrediction predict_batch(const ModelArtifact& artifact, const Schema& schema,
                                     const RawTable& table) {
    if (fnv1a64_hex(schema_to_text(schema)) != artifact.preprocess.schema_digest)
        throw Error("predict_batch: schema digest mismatch with artifact");

    std::string target_name;
    for (const auto& col : schema)
        if (col.kind == ColumnKind::target) target_name = col.name;

    RawTable aligned;
    CleanStats stats;
    std::vector<std::size_t> src_cols;
    for (std::size_t c = 0; c < artifact.preprocess.column_names.size(); ++c) {
        const auto& name = artifact.preprocess.column_names[c];
        const int idx = table.column_index(name);
        if (idx < 0) {
            if (name == target_name) continue;  // prediction rows need no target
            throw Error("predict_batch: input is missing column '" + name + "'");
        }
        aligned.column_names.push_back(name);
        src_cols.push_back(static_cast<std::size_t>(idx));
        stats.impute_values.push_back(artifact.preprocess.impute_values[c]);
    }
    for (const auto& row : table.rows) {
        std::vector<Cell> out_row;
        out_row.reserve(src_cols.size());
        for (const auto c : src_cols) out_row.push_back(row[c]);
        aligned.rows.push_back(std::move(out_row));
    }

    const RawTable imputed = clean_apply(aligned, schema, stats);
    EncoderState state;
    for (std::size_t c = 0; c < artifact.preprocess.column_names.size(); ++c) {
        const auto& name = artifact.preprocess.column_names[c];
        if (aligned.column_index(name) < 0) continue;
        state.categories.push_back(artifact.preprocess.categories[c]);
    }

    BatchPrediction out;
    const Dataset ds = encode_apply(imputed, schema, artifact.preprocess.transform, state,
                                    /*with_target=*/false, &out.warnings);
    if (ds.feature_names != artifact.preprocess.feature_names)
        throw Error("predict_batch: encoded layout does not match artifact");
    out.transformed = predict_any(artifact.model, ds.X);
    out.original = artifact.preprocess.transform == TargetTransform::log1p
                       ? Vector(out.transformed.array().expm1())
                       : out.transformed;
    return out;
}

inline std::string predictions_to_text(const BatchPrediction& pred) {
    std::string out = "# prediction transformed\n";
    for (Eigen::Index i = 0; i < pred.transformed.size(); ++i)
        out += detail::fmt17(pred.original(i)) + " " + detail::fmt17(pred.transformed(i)) + "\n";
    for (const auto& w : pred.warnings) out += "# warning: " + w + "\n";
    return out;
}

// Reads a prediction input that may or may not carry the target column.
inline RawTable load_prediction_rows(const std::string& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string header_line;
    if (!std::getline(in, header_line)) throw Error(path + ": empty file");
    if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
    const auto header = detail::split_csv_line(header_line);
    bool has_target = false;
    for (const auto& col : schema)
        if (col.kind == ColumnKind::target)
            for (const auto& h : header)
                if (h == col.name) has_target = true;
    if (has_target) return load_csv(path, schema);
    Schema reduced;
    for (const auto& col : schema)
        if (col.kind != ColumnKind::target) reduced.push_back(col);
    return load_csv(path, reduced);
}

}  // namespace regkit
