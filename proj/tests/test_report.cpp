#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "regkit/artifact.hpp"
#include "regkit/model.hpp"
#include "regkit/report.hpp"
#include "regkit/rng.hpp"

using namespace regkit;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

RunReport sample_report() {
    RunReport report;
    ReportRow ok;
    ok.model = "linreg";
    ok.setup = "defaults";
    ok.model_score = 0.91;
    ok.r2 = 0.9;
    ok.adj_r2 = 0.89;
    ok.mse = 0.02;
    ok.rmse = 0.1414;
    ok.mae = 0.1;
    ok.cv_score = 88.5;
    ok.note = "2 folds excluded";
    ReportRow bad;
    bad.model = "svr";
    bad.setup = "C=5";
    bad.failed = true;
    bad.note = "did not converge";
    report.rows = {ok, bad};
    report.context["seed"] = 42;
    return report;
}

}  // namespace

TEST_CASE("plot data bins residuals over the observed range") {
    Vector actual(4);
    actual << 0, 1, 2, 3;
    const Vector predicted = Vector::Zero(4);
    const PlotData plot = make_plot_data(actual, predicted, 3);
    REQUIRE(plot.scatter.size() == 4);
    CHECK(plot.scatter[2] == std::pair{2.0, 0.0});
    REQUIRE(plot.bin_edges.size() == 4);
    CHECK(plot.bin_edges.front() == 0.0);
    CHECK(plot.bin_edges.back() == 3.0);
    // residual 3 sits on the top edge and is clamped into the last bin
    CHECK(plot.bin_counts == std::vector<std::uint64_t>{1, 1, 2});

    std::uint64_t total = 0;
    for (const auto c : plot.bin_counts) total += c;
    CHECK(total == 4);
}

TEST_CASE("identical residuals collapse into the first bin") {
    const Vector actual = Vector::Constant(5, 2.0);
    const Vector predicted = Vector::Constant(5, 1.5);
    const PlotData plot = make_plot_data(actual, predicted, 4);
    CHECK(plot.bin_counts == std::vector<std::uint64_t>{5, 0, 0, 0});
    CHECK(plot.bin_edges.front() == plot.bin_edges.back());

    CHECK_THROWS(make_plot_data(actual, predicted, 0));
    CHECK_THROWS(make_plot_data(actual, Vector::Zero(3)));
    CHECK_THROWS(make_plot_data(Vector(0), Vector(0)));
}

TEST_CASE("plot text formats are stable") {
    Vector actual(2);
    actual << 1, 2.5;
    Vector predicted(2);
    predicted << 1, 2;
    const PlotData plot = make_plot_data(actual, predicted, 2);
    CHECK(scatter_to_text(plot) == "# actual predicted\n1 1\n2.5 2\n");
    CHECK(histogram_to_text(plot) ==
          "# residual_low residual_high count\n0 0.25 1\n0.25 0.5 1\n");
}

TEST_CASE("report json round-trips") {
    const RunReport report = sample_report();
    const nlohmann::json j = report_to_json(report);
    const RunReport back = report_from_json(j);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[0].model == "linreg");
    CHECK(back.rows[0].note == "2 folds excluded");
    CHECK(back.rows[0].cv_score == 88.5);
    CHECK(back.rows[0].rmse == 0.1414);
    CHECK_FALSE(back.rows[0].failed);
    CHECK(back.rows[1].failed);
    CHECK(back.rows[1].note == "did not converge");
    CHECK(back.context["seed"] == 42);

    CHECK_THROWS_WITH(report_from_json(nlohmann::json::array()),
                      Catch::Matchers::ContainsSubstring("rows"));
    CHECK_THROWS_WITH(report_from_json(nlohmann::json::object()),
                      Catch::Matchers::ContainsSubstring("rows"));
}

TEST_CASE("report text aligns columns and marks failures") {
    const std::string text = report_to_text(sample_report());
    CHECK(text.find("model") == 0);
    CHECK(text.find("cv_score") != std::string::npos);
    CHECK(text.find("0.900") != std::string::npos);
    CHECK(text.find("88.500") != std::string::npos);
    CHECK(text.find("failed") != std::string::npos);
    CHECK(text.find("note svr: did not converge") != std::string::npos);

    // every line of the table block has the same column starts
    const auto first_eol = text.find('\n');
    const auto second_eol = text.find('\n', first_eol + 1);
    const std::string header = text.substr(0, first_eol);
    const std::string row1 = text.substr(first_eol + 1, second_eol - first_eol - 1);
    CHECK(header.find("model_score") == row1.find("0.910"));
}

TEST_CASE("importance export ranks gain shares and omits zeros") {
    BoostModel model;
    model.importance_raw = {0.0, 3.0, 1.0};
    const std::vector<std::string> names = {"a", "b", "c"};
    auto ranked = export_importance(model, names, 10);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0] == std::pair{std::string{"b"}, 0.75});
    CHECK(ranked[1] == std::pair{std::string{"c"}, 0.25});

    ranked = export_importance(model, names, 1);
    REQUIRE(ranked.size() == 1);
    CHECK(ranked[0].first == "b");

    // equal shares fall back to name order
    model.importance_raw = {2.0, 2.0};
    ranked = export_importance(model, {"z", "y"}, 10);
    CHECK(ranked[0].first == "y");
    CHECK(ranked[1].first == "z");

    CHECK_THROWS_WITH(export_importance(model, names, 10),
                      Catch::Matchers::ContainsSubstring("mismatch"));

    model.importance_raw = {0.0, 0.0};
    CHECK(export_importance(model, {"a", "b"}, 10).empty());

    CHECK(importance_to_text({{"b", 0.75}}) == "# rank\tfeature\tgain_share\n1\tb\t0.75\n");
}

TEST_CASE("search results render one line per evaluated config") {
    SearchResult result;
    EvaluatedConfig good;
    good.config = {{"w", "1"}};
    good.fold_r2 = {1.0, 0.5};
    good.cv_score = 75.0;
    good.rank = 0;
    EvaluatedConfig broken;
    broken.config = {{"w", "bad"}};
    broken.failed = true;
    broken.diagnostic = "unparsable";
    broken.rank = 1;
    result.evaluated = {good, broken};
    const std::string text = search_to_text(result);
    CHECK(text == "# rank\tcv_score\tfold_r2\tconfig\n"
                  "1\t75\t1,0.5\tw=1\n"
                  "2\tfailed\t\tw=bad\tunparsable\n");
}

TEST_CASE("drift check compares cv scores against the stored baseline") {
    ModelArtifact golden;
    golden.meta.cv_score = 90.0;
    golden.meta.r2 = 0.9;

    ReportRow candidate;
    candidate.model = "boost";
    candidate.r2 = 0.88;
    candidate.cv_score = 88.0;  // exactly at the allowed floor
    DriftResult d = drift_check(golden, candidate, 2.0);
    CHECK(d.pass);
    CHECK(d.delta_cv == -2.0);

    candidate.cv_score = 87.999;
    d = drift_check(golden, candidate, 2.0);
    CHECK_FALSE(d.pass);
    CHECK(drift_to_text(d).find("drift-check: fail") == 0);

    candidate.failed = true;
    CHECK_THROWS_WITH(drift_check(golden, candidate, 2.0),
                      Catch::Matchers::ContainsSubstring("failure marker"));
}

TEST_CASE("digest has the expected fnv1a test vectors") {
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
    CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a64_hex("hello") != fnv1a64_hex("hellp"));
}

TEST_CASE("tree text survives extreme values") {
    Tree tree;
    TreeNode split;
    split.feature_index = 3;
    split.threshold = -1.2345678901234567e-300;
    split.left = 1;
    split.right = 2;
    split.value = 0.1;
    split.n_samples = (1ULL << 53) + 1;
    TreeNode leaf_a;
    leaf_a.value = 1e300;
    leaf_a.n_samples = 1;
    TreeNode leaf_b;
    leaf_b.value = -0.30000000000000004;
    leaf_b.n_samples = 2;
    tree.nodes = {split, leaf_a, leaf_b};

    const Tree back = detail::tree_from_text(detail::tree_to_text(tree));
    REQUIRE(back.nodes.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.nodes[i].feature_index == tree.nodes[i].feature_index);
        CHECK(back.nodes[i].threshold == tree.nodes[i].threshold);
        CHECK(back.nodes[i].left == tree.nodes[i].left);
        CHECK(back.nodes[i].right == tree.nodes[i].right);
        CHECK(back.nodes[i].value == tree.nodes[i].value);
        CHECK(back.nodes[i].n_samples == tree.nodes[i].n_samples);
    }

    CHECK_THROWS(detail::tree_from_text(""));
    CHECK_THROWS(detail::tree_from_text("1 2 three\n"));
}

TEST_CASE("artifacts round-trip every model kind byte for byte") {
    Rng rng(71);
    Matrix X(10, 2);
    Vector y(10);
    for (Eigen::Index i = 0; i < 10; ++i) {
        X(i, 0) = rng.uniform(-1.0, 1.0);
        X(i, 1) = rng.uniform(-1.0, 1.0);
        y(i) = 1.0 + X(i, 0) - 2.0 * X(i, 1);
    }

    const std::vector<std::pair<ModelKind, std::vector<std::pair<std::string, std::string>>>>
        setups = {
            {ModelKind::linreg, {}},
            {ModelKind::mlp, {{"hidden_sizes", "4"}, {"max_iter", "5"}}},
            {ModelKind::forest,
             {{"n_estimators", "3"}, {"max_depth", "3"}, {"max_features", "2"}}},
            {ModelKind::svr, {{"C", "2"}, {"kernel", "linear"}}},
            {ModelKind::boost, {{"n_rounds", "4"}, {"max_depth", "2"}}},
        };

    for (const auto& [kind, kvs] : setups) {
        ModelArtifact artifact;
        artifact.kind = kind;
        artifact.model = fit_any(make_params(kind, kvs, 7), X, y);
        artifact.preprocess.schema_digest = "f00f";
        artifact.preprocess.transform = TargetTransform::log1p;
        artifact.preprocess.column_names = {"a", "b", "price"};
        artifact.preprocess.impute_values = {Cell::num(1.5), Cell::str("TA"), Cell::missing()};
        artifact.preprocess.categories = {{}, {"None", "TA"}, {}};
        artifact.preprocess.feature_names = {"a", "b=TA"};
        artifact.preprocess.scaled = artifact.model.scaled;
        artifact.preprocess.scaler = artifact.model.scaler;
        artifact.meta.seed = 7;
        artifact.meta.setup = "defaults";
        artifact.meta.r2 = 0.9;
        artifact.meta.cv_score = 88.0;

        const std::string path = temp_path("regkit_rt_" + to_string(kind) + ".bin");
        const std::string path2 = temp_path("regkit_rt2_" + to_string(kind) + ".bin");
        save_model(artifact, path);
        const ModelArtifact loaded = load_model(path);
        CHECK(loaded.kind == kind);
        CHECK(loaded.meta.cv_score == 88.0);
        CHECK(loaded.meta.setup == "defaults");
        CHECK(loaded.preprocess.schema_digest == "f00f");
        CHECK(loaded.preprocess.impute_values[0].number == 1.5);
        CHECK(loaded.preprocess.impute_values[1].text == "TA");
        CHECK(loaded.preprocess.impute_values[2].is_missing());
        CHECK(loaded.preprocess.categories[1] == std::vector<std::string>{"None", "TA"});

        const Vector before = predict_any(artifact.model, X);
        const Vector after = predict_any(loaded.model, X);
        CHECK((before.array() == after.array()).all());

        save_model(loaded, path2);
        CHECK(slurp(path) == slurp(path2));
        std::remove(path.c_str());
        std::remove(path2.c_str());
    }
}

TEST_CASE("artifact loading rejects damaged files") {
    Matrix X(4, 1);
    X << 1, 2, 3, 4;
    Vector y(4);
    y << 2, 4, 6, 8;
    ModelArtifact artifact;
    artifact.kind = ModelKind::linreg;
    artifact.model = fit_any(LinregParams{}, X, y);
    artifact.preprocess.feature_names = {"x"};
    const std::string path = temp_path("regkit_damage.bin");
    save_model(artifact, path);

    std::string bytes = slurp(path);
    std::string corrupted = bytes;
    corrupted[corrupted.size() / 2] ^= 0x40;
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(corrupted.data(), static_cast<std::streamsize>(corrupted.size()));
    }
    CHECK_THROWS_WITH(load_model(path), Catch::Matchers::ContainsSubstring("checksum"));

    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), 10);
    }
    CHECK_THROWS_WITH(load_model(path), Catch::Matchers::ContainsSubstring("truncated"));

    // well-formed container, wrong magic
    detail::ByteWriter w;
    w.buf.append("NOTMODEL");
    w.u32(1);
    w.u32(0);
    w.u32(static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(w.buf.data()), static_cast<uInt>(w.buf.size()))));
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
    }
    CHECK_THROWS_WITH(load_model(path), Catch::Matchers::ContainsSubstring("not a model artifact"));

    // right magic, unknown version
    detail::ByteWriter v;
    v.buf.append(detail::kArtifactMagic, sizeof detail::kArtifactMagic);
    v.u32(2);
    v.u32(0);
    v.u32(static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(v.buf.data()), static_cast<uInt>(v.buf.size()))));
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(v.buf.data(), static_cast<std::streamsize>(v.buf.size()));
    }
    CHECK_THROWS_WITH(load_model(path), Catch::Matchers::ContainsSubstring("version"));

    std::remove(path.c_str());
    CHECK_THROWS_WITH(load_model(path), Catch::Matchers::ContainsSubstring("cannot open"));
}
