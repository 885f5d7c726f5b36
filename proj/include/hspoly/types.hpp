#pragma once

#include <Eigen/Dense>

namespace hspoly {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace hspoly
