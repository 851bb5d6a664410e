#pragma once

#include <Eigen/Dense>

namespace loadcast {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace loadcast
