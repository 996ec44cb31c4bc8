#include "kdwbc/kinematics.hpp"

#include "kdwbc/geometry.hpp"

namespace kdwbc {

namespace {

matrix3_t axisRotation(const vector3_t& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

void checkDim(const RobotModel& model, const vector_t& x, const char* what) {
  if (x.size() != model.nv()) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " + std::to_string(model.nv()) +
                                ", got " + std::to_string(x.size()));
  }
}

}  // namespace

ForwardKinematics forwardKinematics(const RobotModel& model, const vector_t& q) {
  checkDim(model, q, "forwardKinematics(q)");
  ForwardKinematics fk;
  fk.poses.resize(model.links.size());
  fk.poses[0].R = rotationZyx(q.segment<3>(3));
  fk.poses[0].p = q.head<3>();
  for (size_t i = 1; i < model.links.size(); ++i) {
    const Link& link = model.links[i];
    const LinkPose& parent = fk.poses[static_cast<size_t>(link.parent)];
    const double angle = q[6 + static_cast<int>(i) - 1];
    fk.poses[i].R = parent.R * link.joint_rotation * axisRotation(link.axis, angle);
    fk.poses[i].p = parent.p + parent.R * link.joint_translation;
  }
  for (int c = 0; c < kNumContacts; ++c) {
    fk.contact_positions[static_cast<size_t>(c)] = pointPosition(fk, model.contact(c).link, model.contact(c).offset);
  }
  return fk;
}

matrix_t pointJacobian(const RobotModel& model, const ForwardKinematics& fk, int link, const vector3_t& offset) {
  const vector3_t r = pointPosition(fk, link, offset);
  matrix_t J = matrix_t::Zero(3, model.nv());
  J.leftCols<3>().setIdentity();
  J.middleCols<3>(3) = -skew(r - fk.poses[0].p);
  for (int j : model.supportingJoints(link)) {
    const int child = model.linkOfJoint(j);
    const LinkPose& lp = fk.poses[static_cast<size_t>(child)];
    const vector3_t axis_w = lp.R * model.links[static_cast<size_t>(child)].axis;
    J.col(6 + j) = axis_w.cross(r - lp.p);
  }
  return J;
}

matrix_t contactJacobian(const RobotModel& model, const ForwardKinematics& fk, int contact_index) {
  const ContactFrame& c = model.contact(contact_index);
  return pointJacobian(model, fk, c.link, c.offset);
}

LinkVelocities linkVelocities(const RobotModel& model, const ForwardKinematics& fk, const vector_t& v) {
  checkDim(model, v, "linkVelocities(v)");
  LinkVelocities lv;
  lv.omega.resize(model.links.size());
  lv.vel.resize(model.links.size());
  lv.vel[0] = v.head<3>();
  lv.omega[0] = v.segment<3>(3);
  for (size_t i = 1; i < model.links.size(); ++i) {
    const Link& link = model.links[i];
    const size_t p = static_cast<size_t>(link.parent);
    const vector3_t axis_w = fk.poses[i].R * link.axis;
    lv.omega[i] = lv.omega[p] + axis_w * v[6 + static_cast<int>(i) - 1];
    lv.vel[i] = lv.vel[p] + lv.omega[p].cross(fk.poses[i].p - fk.poses[p].p);
  }
  return lv;
}

vector3_t pointVelocity(const RobotModel&, const ForwardKinematics& fk, const LinkVelocities& lv, int link,
                        const vector3_t& offset) {
  const size_t i = static_cast<size_t>(link);
  return lv.vel[i] + lv.omega[i].cross(fk.poses[i].R * offset);
}

vector3_t pointJdotV(const RobotModel& model, const ForwardKinematics& fk, const LinkVelocities& lv,
                     const vector_t& v, int link, const vector3_t& offset) {
  checkDim(model, v, "pointJdotV(v)");
  // bias accelerations (zero generalized acceleration), world frame
  std::vector<vector3_t> alpha(model.links.size()), acc(model.links.size());
  alpha[0].setZero();
  acc[0].setZero();
  for (size_t i = 1; i < model.links.size(); ++i) {
    const Link& l = model.links[i];
    const size_t p = static_cast<size_t>(l.parent);
    const vector3_t axis_w = fk.poses[i].R * l.axis;
    const vector3_t d = fk.poses[i].p - fk.poses[p].p;
    alpha[i] = alpha[p] + lv.omega[p].cross(axis_w * v[6 + static_cast<int>(i) - 1]);
    acc[i] = acc[p] + alpha[p].cross(d) + lv.omega[p].cross(lv.omega[p].cross(d));
  }
  const size_t i = static_cast<size_t>(link);
  const vector3_t r = fk.poses[i].R * offset;
  return acc[i] + alpha[i].cross(r) + lv.omega[i].cross(lv.omega[i].cross(r));
}

vector3_t contactJdotV(const RobotModel& model, const ForwardKinematics& fk, const LinkVelocities& lv,
                       const vector_t& v, int contact_index) {
  const ContactFrame& c = model.contact(contact_index);
  return pointJdotV(model, fk, lv, v, c.link, c.offset);
}

}  // namespace kdwbc
