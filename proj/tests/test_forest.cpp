#include <catch2/catch_amalgamated.hpp>

#include "regkit/forest.hpp"
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
        for (Eigen::Index j = 0; j < d; ++j) in.X(i, j) = rng.uniform(-1.0, 1.0);
        in.y(i) = in.X(i, 0) - 0.5 * in.X(i, d - 1) + rng.uniform(-0.2, 0.2);
    }
    return in;
}

}  // namespace

TEST_CASE("single unbagged full-feature tree equals a plain cart fit") {
    Rng rng(42);
    for (int rep = 0; rep < 5; ++rep) {
        const auto in = random_instance(rng, 25, 3);
        ForestParams params;
        params.n_estimators = 1;
        params.bootstrap = false;
        params.growth.max_depth = 5;
        params.growth.max_features = 3;
        params.seed = rng.next_u64();
        const ForestModel forest = fit_forest(in.X, in.y, params);

        Rng tree_rng(999);  // unused when every feature is scanned
        const Tree cart = fit_cart(in.X, in.y, params.growth, tree_rng);

        const Vector fp = predict_forest_batch(forest, in.X);
        const Vector tp = predict_tree_batch(cart, in.X);
        CHECK((fp.array() == tp.array()).all());
    }
}

TEST_CASE("forest prediction is the plain mean over trees") {
    Rng rng(7);
    const auto in = random_instance(rng, 40, 2);
    ForestParams params;
    params.n_estimators = 7;
    params.growth.max_depth = 3;
    params.growth.max_features = 1;
    params.seed = 12345;
    const ForestModel forest = fit_forest(in.X, in.y, params);
    REQUIRE(forest.trees.size() == 7);

    Vector x = in.X.row(3).transpose();
    double acc = 0;
    for (const auto& tree : forest.trees) acc += predict_tree(tree, x);
    CHECK(predict_forest(forest, x) == acc / 7.0);
}

TEST_CASE("forest fits are reproducible by seed") {
    Rng rng(8);
    const auto in = random_instance(rng, 30, 3);
    ForestParams params;
    params.n_estimators = 5;
    params.growth.max_depth = 4;
    params.growth.max_features = 2;
    params.seed = 99;

    const Vector a = predict_forest_batch(fit_forest(in.X, in.y, params), in.X);
    const Vector b = predict_forest_batch(fit_forest(in.X, in.y, params), in.X);
    CHECK((a.array() == b.array()).all());

    params.seed = 100;
    const Vector c = predict_forest_batch(fit_forest(in.X, in.y, params), in.X);
    CHECK_FALSE((a.array() == c.array()).all());
}

TEST_CASE("bagged trees differ from each other") {
    Rng rng(9);
    const auto in = random_instance(rng, 50, 2);
    ForestParams params;
    params.n_estimators = 4;
    params.growth.max_depth = 6;
    params.growth.max_features = 2;
    params.seed = 5;
    const ForestModel forest = fit_forest(in.X, in.y, params);

    const Vector first = predict_tree_batch(forest.trees[0], in.X);
    bool any_differ = false;
    for (std::size_t t = 1; t < forest.trees.size(); ++t)
        any_differ |= !(predict_tree_batch(forest.trees[t], in.X).array() == first.array()).all();
    CHECK(any_differ);
}

TEST_CASE("forest input validation") {
    Matrix X(2, 1);
    X << 1, 2;
    Vector y(2);
    y << 1, 2;
    ForestParams params;
    params.n_estimators = 0;
    CHECK_THROWS(fit_forest(X, y, params));

    ForestModel empty;
    CHECK_THROWS(predict_forest(empty, y));
}
