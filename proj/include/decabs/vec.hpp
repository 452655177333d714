#pragma once

#include <Eigen/Dense>

namespace decabs {

// State dimension is bounded so points live on the stack.
inline constexpr int kMaxDim = 6;

using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

inline Point zero_point(int dim) { return Point::Zero(dim); }

}  // namespace decabs
