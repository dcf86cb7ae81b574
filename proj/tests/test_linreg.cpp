#include <catch2/catch_amalgamated.hpp>

#include "regkit/linreg.hpp"
#include "regkit/metrics.hpp"
#include "regkit/rng.hpp"

using namespace regkit;

TEST_CASE("least squares recovers an exact linear rule") {
    Rng rng(11);
    Matrix X(60, 3);
    Vector y(60);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rng.uniform(-2.0, 2.0);
        y(i) = 3.0 + 2.0 * X(i, 0) - X(i, 1) + 0.5 * X(i, 2);
    }
    const LinearModel m = fit_linreg(X, y);
    CHECK(m.intercept == Catch::Approx(3.0).margin(1e-9));
    CHECK(m.coefficients(0) == Catch::Approx(2.0).margin(1e-9));
    CHECK(m.coefficients(1) == Catch::Approx(-1.0).margin(1e-9));
    CHECK(m.coefficients(2) == Catch::Approx(0.5).margin(1e-9));
    CHECK(r2_score(y, predict_linreg(m, X)) == Catch::Approx(1.0));
}

TEST_CASE("duplicated columns get the minimum-norm solution") {
    Matrix X(4, 2);
    X << 1, 1, 2, 2, 3, 3, 4, 4;
    Vector y(4);
    y << 2, 4, 6, 8;  // y = 2 * col0
    const LinearModel m = fit_linreg(X, y);
    CHECK(m.coefficients(0) == Catch::Approx(1.0).margin(1e-10));
    CHECK(m.coefficients(1) == Catch::Approx(1.0).margin(1e-10));
    CHECK((predict_linreg(m, X) - y).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("constant features reduce to the mean predictor") {
    Matrix X = Matrix::Constant(5, 2, 7.0);
    Vector y(5);
    y << 1, 2, 3, 4, 10;
    const LinearModel m = fit_linreg(X, y);
    CHECK(m.coefficients.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(predict_linreg(m, X)(0) == Catch::Approx(4.0));
}

TEST_CASE("linreg input validation") {
    Matrix X(3, 1);
    X << 1, 2, 3;
    Vector y(2);
    y << 1, 2;
    CHECK_THROWS(fit_linreg(X, y));

    Vector y3(3);
    y3 << 1, 2, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(fit_linreg(X, y3));
}
