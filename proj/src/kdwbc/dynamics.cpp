#include "kdwbc/dynamics.hpp"

#include "kdwbc/geometry.hpp"

// Body-coordinate spatial algebra in Featherstone ordering [angular; linear].
// This is intentionally a separate formulation from kinematics.cpp's
// world-frame recursions so the two can cross-validate each other.

namespace kdwbc {

namespace {

struct SpatialMotion {
  vector3_t ang, lin;
};

struct SpatialForce {
  vector3_t ang, lin;  // [moment; force]
};

// Rigid-body inertia stored as (mass, com, rotational inertia about the com),
// all in the current frame.
struct BodyInertia {
  double mass;
  vector3_t com;
  matrix3_t inertia_com;
};

// Pose of a child frame in its parent: p_parent = R * p_child + t.
struct FramePose {
  matrix3_t R;
  vector3_t t;
};

SpatialMotion toChild(const FramePose& X, const SpatialMotion& m) {
  return {X.R.transpose() * m.ang, X.R.transpose() * (m.lin + m.ang.cross(X.t))};
}

SpatialForce toParent(const FramePose& X, const SpatialForce& f) {
  const vector3_t lin = X.R * f.lin;
  return {X.R * f.ang + X.t.cross(lin), lin};
}

BodyInertia toParent(const FramePose& X, const BodyInertia& I) {
  return {I.mass, X.R * I.com + X.t, X.R * I.inertia_com * X.R.transpose()};
}

BodyInertia combine(const BodyInertia& a, const BodyInertia& b) {
  const double m = a.mass + b.mass;
  const vector3_t c = (a.mass * a.com + b.mass * b.com) / m;
  const vector3_t da = a.com - c, db = b.com - c;
  const matrix3_t ic = a.inertia_com + a.mass * skew(da) * skew(da).transpose() +  //
                       b.inertia_com + b.mass * skew(db) * skew(db).transpose();
  return {m, c, ic};
}

SpatialForce apply(const BodyInertia& I, const SpatialMotion& m) {
  const vector3_t com_vel = m.lin + m.ang.cross(I.com);
  const vector3_t lin = I.mass * com_vel;
  const vector3_t ang = I.inertia_com * m.ang + I.com.cross(lin);
  return {ang, lin};
}

SpatialMotion crossMotion(const SpatialMotion& a, const SpatialMotion& b) {
  return {a.ang.cross(b.ang), a.ang.cross(b.lin) + a.lin.cross(b.ang)};
}

SpatialForce crossForce(const SpatialMotion& v, const SpatialForce& f) {
  return {v.ang.cross(f.ang) + v.lin.cross(f.lin), v.ang.cross(f.lin)};
}

struct TreeFrames {
  std::vector<FramePose> X;  // pose of link i in its parent's frame
  matrix3_t R_wb;            // base to world
};

TreeFrames jointFrames(const RobotModel& model, const vector_t& q) {
  TreeFrames t;
  t.X.resize(model.links.size());
  t.R_wb = rotationZyx(q.segment<3>(3));
  for (size_t i = 1; i < model.links.size(); ++i) {
    const Link& l = model.links[i];
    t.X[i].R = l.joint_rotation * Eigen::AngleAxisd(q[6 + static_cast<int>(i) - 1], l.axis).toRotationMatrix();
    t.X[i].t = l.joint_translation;
  }
  return t;
}

// Base generalized coordinates use [world linear velocity; world angular
// velocity]; the recursions run in base coordinates with Featherstone
// ordering.  u0 = T v_b with T = [[0, R^T], [R^T, 0]].
SpatialMotion baseMotion(const matrix3_t& R_wb, const vector6_t& vb) {
  return {R_wb.transpose() * vb.tail<3>(), R_wb.transpose() * vb.head<3>()};
}

vector6_t baseForceToGeneralized(const matrix3_t& R_wb, const SpatialForce& f) {
  vector6_t out;
  out.head<3>() = R_wb * f.lin;
  out.tail<3>() = R_wb * f.ang;
  return out;
}

void checkState(const RobotModel& model, const vector_t& x, const char* what) {
  if (x.size() != model.nv()) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " + std::to_string(model.nv()));
  }
}

}  // namespace

vector_t inverseDynamics(const RobotModel& model, const vector_t& q, const vector_t& v, const vector_t& a) {
  checkState(model, q, "inverseDynamics(q)");
  checkState(model, v, "inverseDynamics(v)");
  checkState(model, a, "inverseDynamics(a)");
  const size_t n = model.links.size();
  const TreeFrames frames = jointFrames(model, q);

  std::vector<SpatialMotion> vel(n), acc(n);
  std::vector<SpatialForce> force(n);

  vel[0] = baseMotion(frames.R_wb, v.head<6>());
  // Body-coordinate spatial acceleration of the base is the componentwise
  // derivative of (R^T w_w, R^T vl_w); the gravity trick folds -g into it.
  acc[0].ang = frames.R_wb.transpose() * a.segment<3>(3);
  acc[0].lin = frames.R_wb.transpose() * (a.head<3>() - v.segment<3>(3).cross(v.head<3>()) - kGravityVector);

  for (size_t i = 0; i < n; ++i) {
    const Link& l = model.links[i];
    if (i > 0) {
      const size_t p = static_cast<size_t>(l.parent);
      const double qd = v[6 + static_cast<int>(i) - 1];
      const double qdd = a[6 + static_cast<int>(i) - 1];
      vel[i] = toChild(frames.X[i], vel[p]);
      vel[i].ang += l.axis * qd;
      acc[i] = toChild(frames.X[i], acc[p]);
      acc[i].ang += l.axis * qdd;
      const SpatialMotion bias = crossMotion(vel[i], SpatialMotion{l.axis * qd, vector3_t::Zero()});
      acc[i].ang += bias.ang;
      acc[i].lin += bias.lin;
    }
    const BodyInertia I{l.mass, l.com, l.inertia};
    const SpatialForce momentum = apply(I, vel[i]);
    const SpatialForce inertial = apply(I, acc[i]);
    const SpatialForce gyro = crossForce(vel[i], momentum);
    force[i] = {inertial.ang + gyro.ang, inertial.lin + gyro.lin};
  }

  vector_t tau = vector_t::Zero(model.nv());
  for (size_t i = n - 1; i > 0; --i) {
    tau[6 + static_cast<int>(i) - 1] = model.links[i].axis.dot(force[i].ang);
    const SpatialForce in_parent = toParent(frames.X[i], force[i]);
    const size_t p = static_cast<size_t>(model.links[i].parent);
    force[p].ang += in_parent.ang;
    force[p].lin += in_parent.lin;
  }
  tau.head<6>() = baseForceToGeneralized(frames.R_wb, force[0]);
  return tau;
}

vector_t nonlinearEffects(const RobotModel& model, const vector_t& q, const vector_t& v) {
  return inverseDynamics(model, q, v, vector_t::Zero(model.nv()));
}

matrix_t massMatrix(const RobotModel& model, const vector_t& q) {
  checkState(model, q, "massMatrix(q)");
  const size_t n = model.links.size();
  const TreeFrames frames = jointFrames(model, q);

  std::vector<BodyInertia> composite(n);
  for (size_t i = 0; i < n; ++i) {
    const Link& l = model.links[i];
    composite[i] = {l.mass, l.com, l.inertia};
  }
  for (size_t i = n - 1; i > 0; --i) {
    const size_t p = static_cast<size_t>(model.links[i].parent);
    composite[p] = combine(composite[p], toParent(frames.X[i], composite[i]));
  }

  matrix_t M = matrix_t::Zero(model.nv(), model.nv());

  // base block: T^T I0 T with the [linear; angular] reordering
  {
    const BodyInertia& I0 = composite[0];
    const matrix3_t ibar = I0.inertia_com + I0.mass * skew(I0.com) * skew(I0.com).transpose();
    const matrix3_t sh = I0.mass * skew(I0.com);
    const matrix3_t& R = frames.R_wb;
    M.block<3, 3>(0, 0) = I0.mass * matrix3_t::Identity();
    M.block<3, 3>(0, 3) = R * sh.transpose() * R.transpose();
    M.block<3, 3>(3, 0) = R * sh * R.transpose();
    M.block<3, 3>(3, 3) = R * ibar * R.transpose();
  }

  for (size_t i = 1; i < n; ++i) {
    const int col = 6 + static_cast<int>(i) - 1;
    SpatialForce F = apply(composite[i], SpatialMotion{model.links[i].axis, vector3_t::Zero()});
    M(col, col) = model.links[i].axis.dot(F.ang);
    size_t j = i;
    while (model.links[j].parent > 0) {
      F = toParent(frames.X[j], F);
      j = static_cast<size_t>(model.links[j].parent);
      const int row = 6 + static_cast<int>(j) - 1;
      M(row, col) = model.links[j].axis.dot(F.ang);
      M(col, row) = M(row, col);
    }
    F = toParent(frames.X[j], F);  // into base coordinates
    const vector6_t base_col = baseForceToGeneralized(frames.R_wb, F);
    M.block<6, 1>(0, col) = base_col;
    M.block<1, 6>(col, 0) = base_col.transpose();
  }
  return M;
}

CentroidalQuantities centroidalMomentum(const RobotModel& model, const vector_t& q, const vector_t& v) {
  checkState(model, q, "centroidalMomentum(q)");
  checkState(model, v, "centroidalMomentum(v)");
  const ForwardKinematics fk = forwardKinematics(model, q);

  vector3_t com = vector3_t::Zero();
  for (size_t i = 0; i < model.links.size(); ++i) {
    com += model.links[i].mass * pointPosition(fk, static_cast<int>(i), model.links[i].com);
  }
  com /= model.total_mass;

  matrix_t A = matrix_t::Zero(6, model.nv());
  for (size_t i = 0; i < model.links.size(); ++i) {
    const Link& l = model.links[i];
    const vector3_t ci = pointPosition(fk, static_cast<int>(i), l.com);
    const matrix3_t I_w = fk.poses[i].R * l.inertia * fk.poses[i].R.transpose();

    // angular jacobian of link i
    matrix_t Jw = matrix_t::Zero(3, model.nv());
    Jw.middleCols<3>(3).setIdentity();
    for (int j : model.supportingJoints(static_cast<int>(i))) {
      const int child = model.linkOfJoint(j);
      Jw.col(6 + j) = fk.poses[static_cast<size_t>(child)].R * model.links[static_cast<size_t>(child)].axis;
    }
    const matrix_t Jc = pointJacobian(model, fk, static_cast<int>(i), l.com);

    A.topRows<3>() += l.mass * Jc;
    A.bottomRows<3>() += skew(ci - com) * (l.mass * Jc) + I_w * Jw;
  }

  CentroidalQuantities out;
  out.A_b = A.leftCols<6>();
  out.A_j = A.rightCols(model.n_j);
  out.h_com = A * v;
  out.com_position = com;
  Eigen::JacobiSVD<matrix6_t> svd(out.A_b);
  const double smin = svd.singularValues().minCoeff();
  out.A_b_condition = smin > 0.0 ? svd.singularValues().maxCoeff() / smin
                                 : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace kdwbc
