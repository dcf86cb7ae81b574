#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace regkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace regkit
