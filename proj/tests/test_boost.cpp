#include <catch2/catch_amalgamated.hpp>

#include "regkit/artifact.hpp"
#include "regkit/gbdt.hpp"
#include "regkit/metrics.hpp"
#include "regkit/rng.hpp"

using namespace regkit;

namespace {

struct Instance {
    Matrix X;
    Vector y;
};

Instance random_instance(Rng& rng, Eigen::Index n, Eigen::Index d) {
    Instance in;
    in.X.resize(n, d);
    in.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) in.X(i, j) = rng.uniform(-2.0, 2.0);
        in.y(i) = std::sin(in.X(i, 0)) + 0.3 * in.X(i, d - 1);
    }
    return in;
}

}  // namespace

TEST_CASE("zero rounds leaves only the base score") {
    Matrix X(3, 1);
    X << 1, 2, 3;
    Vector y(3);
    y << 10, 20, 60;
    BoostParams params;
    params.n_rounds = 0;
    const BoostModel model = fit_boost(X, y, params);
    CHECK(model.trees.empty());
    CHECK(model.base_score == 30.0);
    CHECK(predict_boost(model, Vector::Constant(1, 5.0)) == 30.0);
}

TEST_CASE("one depth-zero round recovers the target mean from a zero base") {
    Matrix X(4, 1);
    X << 1, 2, 3, 4;
    Vector y(4);
    y << 1, 1, 1, 1;

    BoostParams params;
    params.n_rounds = 1;
    params.max_depth = 0;
    params.learning_rate = 1.0;
    params.lambda = 0.0;
    params.base_score = 0.0;
    const BoostModel model = fit_boost(X, y, params);
    REQUIRE(model.trees.size() == 1);
    REQUIRE(model.trees[0].nodes.size() == 1);
    CHECK(model.trees[0].nodes[0].value == 1.0);

    // lambda shrinks the same leaf toward zero: sum(y) / (n + lambda)
    params.lambda = 4.0;
    const BoostModel shrunk = fit_boost(X, y, params);
    CHECK(shrunk.trees[0].nodes[0].value == Catch::Approx(4.0 / 8.0).margin(1e-15));
}

TEST_CASE("training error never increases across rounds") {
    Rng rng(21);
    const auto in = random_instance(rng, 60, 3);
    BoostParams params;
    params.n_rounds = 30;
    params.learning_rate = 0.3;
    params.max_depth = 3;
    const BoostModel model = fit_boost(in.X, in.y, params);

    Vector yhat = Vector::Constant(in.y.size(), model.base_score);
    double prev = (in.y - yhat).squaredNorm();
    for (const auto& tree : model.trees) {
        for (Eigen::Index i = 0; i < in.X.rows(); ++i)
            yhat(i) += predict_tree(tree, Vector(in.X.row(i).transpose()));
        const double cur = (in.y - yhat).squaredNorm();
        CHECK(cur <= prev + 1e-9);
        prev = cur;
    }
    CHECK((predict_boost_batch(model, in.X).array() == yhat.array()).all());
}

TEST_CASE("a shorter run is a prefix of a longer one") {
    Rng rng(22);
    const auto in = random_instance(rng, 50, 2);
    BoostParams params;
    params.n_rounds = 8;
    params.max_depth = 3;
    params.subsample = 0.7;
    params.seed = 77;
    const BoostModel full = fit_boost(in.X, in.y, params);

    params.n_rounds = 3;
    const BoostModel prefix = fit_boost(in.X, in.y, params);
    REQUIRE(full.trees.size() == 8);
    REQUIRE(prefix.trees.size() == 3);
    for (std::size_t t = 0; t < 3; ++t)
        CHECK(detail::tree_to_text(full.trees[t]) == detail::tree_to_text(prefix.trees[t]));
}

TEST_CASE("gain importance concentrates on the informative feature") {
    Rng rng(23);
    Matrix X(80, 3);
    Vector y(80);
    for (Eigen::Index i = 0; i < 80; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) X(i, j) = rng.uniform(0.0, 1.0);
        y(i) = X(i, 1) > 0.5 ? 5.0 : 0.0;
    }
    BoostParams params;
    params.n_rounds = 10;
    params.max_depth = 2;
    const BoostModel model = fit_boost(X, y, params);
    const auto scores = feature_importance(model);
    REQUIRE(scores.size() == 3);
    double total = 0;
    for (const auto s : scores) total += s;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
    CHECK(scores[1] > scores[0]);
    CHECK(scores[1] > scores[2]);
    CHECK(scores[1] > 0.9);
}

TEST_CASE("min_child_weight can forbid every split") {
    Matrix X(4, 1);
    X << 1, 2, 3, 4;
    Vector y(4);
    y << 0, 0, 10, 10;
    BoostParams params;
    params.n_rounds = 2;
    params.max_depth = 4;
    params.min_child_weight = 3.0;  // children would need >= 3 rows each out of 4
    const BoostModel model = fit_boost(X, y, params);
    for (const auto& tree : model.trees) CHECK(tree.nodes.size() == 1);
}

TEST_CASE("subsampled fits stay deterministic per seed") {
    Rng rng(24);
    const auto in = random_instance(rng, 40, 2);
    BoostParams params;
    params.n_rounds = 6;
    params.max_depth = 3;
    params.subsample = 0.5;
    params.seed = 31;
    const Vector a = predict_boost_batch(fit_boost(in.X, in.y, params), in.X);
    const Vector b = predict_boost_batch(fit_boost(in.X, in.y, params), in.X);
    CHECK((a.array() == b.array()).all());

    params.seed = 32;
    const Vector c = predict_boost_batch(fit_boost(in.X, in.y, params), in.X);
    CHECK_FALSE((a.array() == c.array()).all());
}

TEST_CASE("boost input validation") {
    Matrix X(4, 1);
    X << 1, 2, 3, 4;
    Vector y(4);
    y << 1, 2, 3, 4;

    BoostParams params;
    params.learning_rate = 0.0;
    CHECK_THROWS_WITH(fit_boost(X, y, params), Catch::Matchers::ContainsSubstring("learning_rate"));

    params = {};
    params.subsample = 0.0;
    CHECK_THROWS_WITH(fit_boost(X, y, params), Catch::Matchers::ContainsSubstring("subsample"));

    params = {};
    params.lambda = -1.0;
    CHECK_THROWS(fit_boost(X, y, params));

    params = {};
    Vector bad = y;
    bad(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH(fit_boost(X, bad, params), Catch::Matchers::ContainsSubstring("non-finite"));

    CHECK_THROWS_WITH(fit_boost(X, Vector::Zero(3), params),
                      Catch::Matchers::ContainsSubstring("row count"));
}
