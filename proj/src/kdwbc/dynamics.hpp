#pragma once

#include "kdwbc/kinematics.hpp"
#include "kdwbc/robot_model.hpp"
#include "kdwbc/types.hpp"

namespace kdwbc {

inline const vector3_t kGravityVector{0.0, 0.0, -kGravity};

// Generalized force required to realize acceleration a at state (q, v):
// tau = M(q) a + n(q, v). Recursive Newton-Euler over the kinematic tree.
vector_t inverseDynamics(const RobotModel& model, const vector_t& q, const vector_t& v, const vector_t& a);

// Coriolis, centrifugal, and gravity terms: inverseDynamics(q, v, 0).
vector_t nonlinearEffects(const RobotModel& model, const vector_t& q, const vector_t& v);

// Joint-space inertia matrix via the composite-rigid-body algorithm.
// Symmetric positive definite, (6+n_j) square.
matrix_t massMatrix(const RobotModel& model, const vector_t& q);

struct CentroidalQuantities {
  matrix6_t A_b;               // centroidal momentum matrix, base block
  matrix_t A_j;                // 6 x n_j actuated block
  vector6_t h_com;             // [linear; angular about CoM] momentum
  vector3_t com_position;
  double A_b_condition = 0.0;  // spectral condition number of A_b
};

CentroidalQuantities centroidalMomentum(const RobotModel& model, const vector_t& q, const vector_t& v);

}  // namespace kdwbc
