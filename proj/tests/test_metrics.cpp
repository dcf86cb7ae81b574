#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "regkit/metrics.hpp"
#include "regkit/rng.hpp"

using namespace regkit;

TEST_CASE("error metrics on hand-checked vectors") {
    Vector y(2), p(2);
    y << 0, 0;
    p << 3, 4;
    CHECK(mse(y, p) == Catch::Approx(12.5));
    CHECK(rmse(y, p) == Catch::Approx(std::sqrt(12.5)));
    CHECK(mae(y, p) == Catch::Approx(3.5));

    Vector same(3);
    same << 1, 2, 3;
    CHECK(mse(same, same) == 0.0);
    CHECK(mae(same, same) == 0.0);
    CHECK(r2_score(same, same) == 1.0);
}

TEST_CASE("r2 is one minus residual over total sum of squares") {
    Vector y(2), p(2);
    y << 0, 2;  // mean 1, total SS 2
    p << 1, 2;  // residual SS 1
    CHECK(r2_score(y, p) == Catch::Approx(0.5));

    Vector worse(2);
    worse << 3, 3;  // residual SS 10 > 2: r2 goes negative
    CHECK(r2_score(y, worse) == Catch::Approx(-4.0));

    Vector constant(3), any(3);
    constant << 5, 5, 5;
    any << 1, 2, 3;
    CHECK_THROWS_WITH(r2_score(constant, any), Catch::Matchers::ContainsSubstring("constant"));
}

TEST_CASE("adjusted r2 penalizes model size") {
    CHECK(adjusted_r2(0.9, 10, 2) == Catch::Approx(1.0 - 0.1 * 9.0 / 7.0));
    CHECK(adjusted_r2(1.0, 50, 10) == 1.0);
    CHECK_THROWS(adjusted_r2(0.9, 3, 2));   // needs n > k + 1
    CHECK_THROWS(adjusted_r2(0.9, 1, 0));
}

TEST_CASE("metric input checks") {
    Vector a(2), b(3), empty(0);
    a << 1, 2;
    b << 1, 2, 3;
    CHECK_THROWS(mse(a, b));
    CHECK_THROWS(mae(empty, empty));
    CHECK_THROWS(r2_score(a, b));
}

TEST_CASE("metrics agree with an independent reference on random data") {
    Rng rng(20240601);
    for (int rep = 0; rep < 50; ++rep) {
        const auto n = static_cast<Eigen::Index>(2 + rng.below(199));
        Vector y(n), p(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y(i) = rng.uniform(-100.0, 100.0);
            p(i) = y(i) + rng.uniform(-10.0, 10.0);
        }
        const std::size_t k = 1 + rng.below(static_cast<std::uint64_t>(n) - 1);
        if (n <= static_cast<Eigen::Index>(k) + 1) continue;

        const Metrics m = compute_metrics(y, p, k);
        const auto r = ref::metrics(y, p, k);
        CHECK_THAT(m.mse, Catch::Matchers::WithinRel(r.mse, 1e-12));
        CHECK_THAT(m.rmse, Catch::Matchers::WithinRel(r.rmse, 1e-12));
        CHECK_THAT(m.mae, Catch::Matchers::WithinRel(r.mae, 1e-12));
        CHECK_THAT(m.r2, Catch::Matchers::WithinRel(r.r2, 1e-12));
        CHECK_THAT(m.adj_r2, Catch::Matchers::WithinRel(r.adj_r2, 1e-12));
    }
}
