#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "regkit/experiment.hpp"

namespace {

struct Overrides {
    std::optional<std::string> data;
    std::optional<std::string> schema;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> folds;
    std::optional<double> test_fraction;
    std::optional<std::string> out;
    std::optional<std::string> models;
};

void add_override_flags(CLI::App* cmd, std::string& config_path, Overrides& ov) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--data", ov.data, "override experiment.data");
    cmd->add_option("--schema", ov.schema, "override experiment.schema");
    cmd->add_option("--seed", ov.seed, "override experiment.seed");
    cmd->add_option("--folds", ov.folds, "override experiment.folds");
    cmd->add_option("--test-fraction", ov.test_fraction, "override experiment.test_fraction");
    cmd->add_option("--out", ov.out, "override experiment.out");
    cmd->add_option("--models", ov.models, "override experiment.models (comma separated)");
}

regkit::ExperimentConfig load_with_overrides(const std::string& path, const Overrides& ov) {
    regkit::ExperimentConfig config = regkit::load_experiment_config(path);
    if (ov.data) config.data_path = *ov.data;
    if (ov.schema) config.schema_path = *ov.schema;
    if (ov.seed) config.seed = *ov.seed;
    if (ov.folds) config.folds = *ov.folds;
    if (ov.test_fraction) config.test_fraction = *ov.test_fraction;
    if (ov.out) config.out_dir = *ov.out;
    if (ov.models) config.models = regkit::parse_model_list(*ov.models);
    return config;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw regkit::Error("cannot open '" + path + "'");
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

class StageClock {
  public:
    ~StageClock() {
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
        std::cerr << "elapsed: " << ms << " ms\n";
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"regression benchmark toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;

    auto* validate_cmd = app.add_subcommand("validate", "schema-check a data file");
    add_override_flags(validate_cmd, config_path, ov);

    auto* train_cmd = app.add_subcommand("train", "fit every enabled model and persist artifacts");
    add_override_flags(train_cmd, config_path, ov);

    auto* evaluate_cmd = app.add_subcommand("evaluate", "run the benchmark without persisting models");
    add_override_flags(evaluate_cmd, config_path, ov);

    auto* tune_cmd = app.add_subcommand("tune", "grid search per model, then refit the winners");
    add_override_flags(tune_cmd, config_path, ov);

    std::string artifact_path, data_path, schema_path, out_path;
    auto* predict_cmd = app.add_subcommand("predict", "score new rows with a saved model");
    predict_cmd->add_option("--models", artifact_path, "model artifact file")->required();
    predict_cmd->add_option("--data", data_path, "csv of rows to score")->required();
    predict_cmd->add_option("--schema", schema_path, "schema the artifact was trained under")->required();
    predict_cmd->add_option("--out", out_path, "predictions file (stdout if omitted)");

    std::string report_json_path;
    auto* report_cmd = app.add_subcommand("report", "render a report json as aligned text");
    report_cmd->add_option("--data", report_json_path, "report json file")->required();
    report_cmd->add_option("--out", out_path, "text file (stdout if omitted)");

    std::string golden_path, candidate_path;
    double threshold = 2.0;
    auto* drift_cmd = app.add_subcommand("drift-check", "compare a candidate report against a golden artifact");
    drift_cmd->add_option("--models", golden_path, "golden model artifact")->required();
    drift_cmd->add_option("--data", candidate_path, "candidate report json")->required();
    drift_cmd->add_option("--threshold", threshold, "allowed cv_score drop (default 2.0)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate_cmd) {
            const auto config = load_with_overrides(config_path, ov);
            const auto schema = regkit::load_schema(config.schema_path);
            const auto table = regkit::load_csv(config.data_path, schema);
            const auto report = regkit::validate(table, schema);
            std::cout << report.to_text();
            return report.pass ? 0 : 1;
        }
        if (*train_cmd || *evaluate_cmd) {
            StageClock clock;
            const auto config = load_with_overrides(config_path, ov);
            const auto result = regkit::run_experiment(config, /*write_artifacts=*/bool(*train_cmd));
            std::cout << regkit::report_to_text(result.report);
            return 0;
        }
        if (*tune_cmd) {
            StageClock clock;
            const auto config = load_with_overrides(config_path, ov);
            const auto result = regkit::tune_and_run(config);
            std::cout << regkit::report_to_text(result.report);
            return 0;
        }
        if (*predict_cmd) {
            const auto artifact = regkit::load_model(artifact_path);
            const auto schema = regkit::load_schema(schema_path);
            const auto rows = regkit::load_prediction_rows(data_path, schema);
            const auto pred = regkit::predict_batch(artifact, schema, rows);
            const std::string text = regkit::predictions_to_text(pred);
            if (out_path.empty()) std::cout << text;
            else regkit::detail::write_text_file(out_path, text);
            for (const auto& w : pred.warnings) std::cerr << "warning: " << w << "\n";
            return 0;
        }
        if (*report_cmd) {
            const auto j = nlohmann::json::parse(read_text_file(report_json_path));
            const std::string text = regkit::report_to_text(regkit::report_from_json(j));
            if (out_path.empty()) std::cout << text;
            else regkit::detail::write_text_file(out_path, text);
            return 0;
        }
        if (*drift_cmd) {
            const auto golden = regkit::load_model(golden_path);
            const auto j = nlohmann::json::parse(read_text_file(candidate_path));
            const auto candidate = regkit::report_from_json(j);
            const std::string model_name = regkit::to_string(golden.kind);
            const regkit::ReportRow* row = nullptr;
            for (const auto& r : candidate.rows)
                if (r.model == model_name) {
                    row = &r;
                    break;
                }
            if (!row) throw regkit::Error("candidate report has no '" + model_name + "' row");
            if (row->failed)
                throw regkit::Error("candidate '" + model_name + "' row is a failure: " + row->note);
            const auto drift = regkit::drift_check(golden, *row, threshold);
            std::cout << regkit::drift_to_text(drift);
            return drift.pass ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
