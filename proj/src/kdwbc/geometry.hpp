#pragma once

#include "kdwbc/types.hpp"

namespace kdwbc {

matrix3_t skew(const vector3_t& v);

// ZYX-Euler angles stored as (yaw, pitch, roll): R = Rz(yaw) * Ry(pitch) * Rx(roll).
matrix3_t rotationZyx(const vector3_t& euler);

// Maps ZYX-Euler rates to the world-frame angular velocity: omega = E(euler) * euler_dot.
// Singular at |pitch| = pi/2; states there are rejected upstream.
matrix3_t eulerRateMatrixZyx(const vector3_t& euler);

// omega -> euler_dot. Throws std::domain_error near the pitch singularity.
vector3_t eulerRatesFromAngularVelocity(const vector3_t& euler, const vector3_t& omega);

// Rotation logarithm as a 3-vector (angle * axis). Inverse of the exponential map.
vector3_t rotationLog(const matrix3_t& R);

// Pose error used by box-minus: [p_a - p_b; log(R_a * R_b^T)] for poses (p, euler).
vector6_t poseBoxMinus(const vector6_t& pose_a, const vector6_t& pose_b);

}  // namespace kdwbc
