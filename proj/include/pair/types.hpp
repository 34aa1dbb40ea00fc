#pragma once

#include <Eigen/Dense>

namespace pair {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

} // namespace pair
