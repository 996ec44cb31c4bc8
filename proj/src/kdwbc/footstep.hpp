#pragma once

#include "kdwbc/terrain.hpp"
#include "kdwbc/types.hpp"

namespace kdwbc {

// Footstep target from the hip position: half-stance travel of the commanded
// velocity, capture-point velocity feedback, and the centrifugal term, with
// the height projected onto the terrain.
//   p_d = p_hip + (dt_stance/2) v_des + k (v_meas - v_des)
//               + sqrt(h/|g|) (v_meas x w_des),   p_d.z = terrain(p_d.x, p_d.y)
vector3_t planFootstep(const vector3_t& hip_position, const vector3_t& base_vel_desired,
                       const vector3_t& base_vel_measured, const vector3_t& base_angvel_desired,
                       double stance_time, double nominal_height, double capture_gain,
                       const Terrain& terrain);

}  // namespace kdwbc
