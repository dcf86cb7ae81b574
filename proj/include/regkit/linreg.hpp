#pragma once

#include <Eigen/Dense>

#include "regkit/common.hpp"

namespace regkit {

struct LinearModel {
    double intercept = 0.0;
    Vector coefficients;
};

// Ordinary least squares. Centering X and y first means the intercept is
// exact and the coefficient vector is the minimum-norm least-squares
// solution, so rank-deficient designs (constant or duplicated columns) get
// a well-defined answer instead of an exploding one.
inline LinearModel fit_linreg(const Matrix& X, const Vector& y) {
    if (X.rows() != y.size()) throw Error("fit_linreg: row count mismatch");
    if (X.rows() == 0) throw Error("fit_linreg: empty data");
    if (!X.allFinite() || !y.allFinite()) throw Error("fit_linreg: non-finite input");

    const Vector x_mean = X.colwise().mean();
    const double y_mean = y.mean();
    const Matrix Xc = X.rowwise() - x_mean.transpose();
    const Vector yc = y.array() - y_mean;

    LinearModel model;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Xc);
    model.coefficients = cod.solve(yc);
    model.intercept = y_mean - x_mean.dot(model.coefficients);
    return model;
}

inline Vector predict_linreg(const LinearModel& model, const Matrix& X) {
    if (X.cols() != model.coefficients.size()) throw Error("predict_linreg: dimension mismatch");
    return (X * model.coefficients).array() + model.intercept;
}

}  // namespace regkit
