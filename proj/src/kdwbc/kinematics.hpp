#pragma once

#include <vector>

#include "kdwbc/robot_model.hpp"
#include "kdwbc/types.hpp"

namespace kdwbc {

struct LinkPose {
  matrix3_t R;   // link frame to world
  vector3_t p;   // link origin in world
};

struct ForwardKinematics {
  std::vector<LinkPose> poses;
  std::array<vector3_t, kNumContacts> contact_positions;
};

ForwardKinematics forwardKinematics(const RobotModel& model, const vector_t& q);

inline vector3_t pointPosition(const ForwardKinematics& fk, int link, const vector3_t& offset) {
  const LinkPose& lp = fk.poses[static_cast<size_t>(link)];
  return lp.p + lp.R * offset;
}

// 3 x (6+n_j) Jacobian of a link-fixed point's world velocity w.r.t. the
// generalized velocity [base linear; base angular; joint rates].
matrix_t pointJacobian(const RobotModel& model, const ForwardKinematics& fk, int link, const vector3_t& offset);

matrix_t contactJacobian(const RobotModel& model, const ForwardKinematics& fk, int contact_index);

// World angular/linear velocity of every link (linear taken at the link origin).
struct LinkVelocities {
  std::vector<vector3_t> omega;
  std::vector<vector3_t> vel;
};
LinkVelocities linkVelocities(const RobotModel& model, const ForwardKinematics& fk, const vector_t& v);

vector3_t pointVelocity(const RobotModel& model, const ForwardKinematics& fk, const LinkVelocities& lv, int link,
                        const vector3_t& offset);

// J̇·v at a link-fixed point: its classical world acceleration under zero
// generalized acceleration.
vector3_t pointJdotV(const RobotModel& model, const ForwardKinematics& fk, const LinkVelocities& lv,
                     const vector_t& v, int link, const vector3_t& offset);

vector3_t contactJdotV(const RobotModel& model, const ForwardKinematics& fk, const LinkVelocities& lv,
                       const vector_t& v, int contact_index);

}  // namespace kdwbc
