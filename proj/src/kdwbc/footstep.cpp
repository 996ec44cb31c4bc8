#include "kdwbc/footstep.hpp"

#include <cmath>
#include <stdexcept>

namespace kdwbc {

vector3_t planFootstep(const vector3_t& hip_position, const vector3_t& base_vel_desired,
                       const vector3_t& base_vel_measured, const vector3_t& base_angvel_desired,
                       double stance_time, double nominal_height, double capture_gain,
                       const Terrain& terrain) {
  if (!(stance_time > 0.0) || !(nominal_height > 0.0)) {
    throw std::invalid_argument("planFootstep: stance_time and nominal_height must be positive");
  }
  const vector3_t capture =
      0.5 * stance_time * base_vel_desired + capture_gain * (base_vel_measured - base_vel_desired);
  const vector3_t centrifugal = std::sqrt(nominal_height / kGravity) * base_vel_measured.cross(base_angvel_desired);
  vector3_t target = hip_position + capture + centrifugal;
  target.z() = terrain.height(target.x(), target.y());
  return target;
}

}  // namespace kdwbc
