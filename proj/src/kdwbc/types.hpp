#pragma once

#include <Eigen/Dense>

namespace kdwbc {

using scalar_t = double;
using vector_t = Eigen::VectorXd;
using matrix_t = Eigen::MatrixXd;
using vector3_t = Eigen::Vector3d;
using vector6_t = Eigen::Matrix<double, 6, 1>;
using matrix3_t = Eigen::Matrix3d;
using matrix6_t = Eigen::Matrix<double, 6, 6>;

inline constexpr double kGravity = 9.81;  // |g|, g points along -z
inline constexpr int kNumContacts = 4;    // toe/heel per foot, two feet

}  // namespace kdwbc
