#include "kdwbc/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace kdwbc {

matrix3_t skew(const vector3_t& v) {
  matrix3_t s;
  s << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return s;
}

matrix3_t rotationZyx(const vector3_t& euler) {
  const double cy = std::cos(euler[0]), sy = std::sin(euler[0]);
  const double cp = std::cos(euler[1]), sp = std::sin(euler[1]);
  const double cr = std::cos(euler[2]), sr = std::sin(euler[2]);
  matrix3_t rz, ry, rx;
  rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
  ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
  rx << 1, 0, 0, 0, cr, -sr, 0, sr, cr;
  return rz * ry * rx;
}

matrix3_t eulerRateMatrixZyx(const vector3_t& euler) {
  // omega = yaw_dot * z + pitch_dot * Rz*y + roll_dot * Rz*Ry*x
  const double cy = std::cos(euler[0]), sy = std::sin(euler[0]);
  const double cp = std::cos(euler[1]), sp = std::sin(euler[1]);
  matrix3_t e;
  e.col(0) = vector3_t(0, 0, 1);
  e.col(1) = vector3_t(-sy, cy, 0);
  e.col(2) = vector3_t(cy * cp, sy * cp, -sp);
  return e;
}

vector3_t eulerRatesFromAngularVelocity(const vector3_t& euler, const vector3_t& omega) {
  if (std::abs(std::cos(euler[1])) < 1e-8) {
    throw std::domain_error("euler rate mapping singular: pitch at +/- pi/2");
  }
  return eulerRateMatrixZyx(euler).partialPivLu().solve(omega);
}

vector3_t rotationLog(const matrix3_t& R) {
  const double tr = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double angle = std::acos(tr);
  if (angle < 1e-10) {
    // first-order: log(R) ~ vex(R - R^T)/2
    return 0.5 * vector3_t(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  }
  if (angle > M_PI - 1e-6) {
    // near pi: extract axis from R + I
    matrix3_t B = 0.5 * (R + matrix3_t::Identity());
    vector3_t axis;
    int k;
    B.diagonal().maxCoeff(&k);
    axis = B.col(k) / std::sqrt(B(k, k));
    // fix sign using the off-diagonal antisymmetric part
    vector3_t vex(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    if (vex.dot(axis) < 0.0) axis = -axis;
    return angle * axis;
  }
  vector3_t vex(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return angle / (2.0 * std::sin(angle)) * vex;
}

vector6_t poseBoxMinus(const vector6_t& pose_a, const vector6_t& pose_b) {
  vector6_t err;
  err.head<3>() = pose_a.head<3>() - pose_b.head<3>();
  err.tail<3>() = rotationLog(rotationZyx(pose_a.tail<3>()) * rotationZyx(pose_b.tail<3>()).transpose());
  return err;
}

}  // namespace kdwbc
