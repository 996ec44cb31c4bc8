#include "kdwbc/ocp.hpp"

#include "kdwbc/barrier.hpp"
#include "kdwbc/geometry.hpp"
#include "kdwbc/kinematics.hpp"

namespace kdwbc {

namespace {

constexpr double kFrictionSmoothing = 1e-3;  // N, smooths sqrt at zero tangential force

void checkPlannerDims(const RobotModel& m, const vector_t& x, const vector_t& u) {
  if (x.size() != plannerStateDim(m) || u.size() != plannerInputDim(m)) {
    throw std::invalid_argument("planner state/input dimension mismatch");
  }
}

}  // namespace

NodeEval makeNodeEval(const RobotModel& m, const vector_t& x, const vector_t& u) {
  checkPlannerDims(m, x, u);
  NodeEval ev;
  ev.q = coordinatesFromPlannerState(m, x);
  ev.fk = forwardKinematics(m, ev.q);
  ev.cq = centroidalMomentum(m, ev.q, vector_t::Zero(m.nv()));
  if (ev.cq.A_b_condition > 1e12) {
    throw FlowError("dynamicsFlow: centroidal base block singular (condition " +
                    std::to_string(ev.cq.A_b_condition) + ")");
  }
  ev.ab_lu.compute(ev.cq.A_b);
  const vector_t v_j = u.tail(m.n_j);
  ev.v_b = ev.ab_lu.solve(x.head<6>() - ev.cq.A_j * v_j);
  ev.v.resize(m.nv());
  ev.v.head<6>() = ev.v_b;
  ev.v.tail(m.n_j) = v_j;
  return ev;
}

void OcpConfig::validate() const {
  if (!(horizon > 0.0) || nodes < 2) throw std::invalid_argument("OcpConfig: horizon/nodes invalid");
  if (!(delta_rbf > 0.0) || !(xi_rbf > 0.0)) throw std::invalid_argument("OcpConfig: barrier parameters invalid");
  if (!(mu_s > 0.0)) throw std::invalid_argument("OcpConfig: friction coefficient invalid");
  if (capture_gain < 0.0 || capture_gain > 1.0) throw std::invalid_argument("OcpConfig: capture gain outside [0,1]");
  if (q_momentum < 0.0 || q_base_pose < 0.0 || q_joints < 0.0 || r_forces < 0.0 || r_joint_vel < 0.0) {
    throw std::invalid_argument("OcpConfig: weights must be nonnegative");
  }
}

vector_t coordinatesFromPlannerState(const RobotModel& m, const vector_t& x) {
  vector_t q(m.nv());
  q.head<6>() = x.segment<6>(6);
  q.tail(m.n_j) = x.tail(m.n_j);
  return q;
}

vector_t generalizedVelocityFromPlanner(const RobotModel& m, const vector_t& x, const vector_t& u) {
  return makeNodeEval(m, x, u).v;
}

vector_t plannerStateOfMeasurement(const RobotModel& m, const GeneralizedState& gs) {
  const CentroidalQuantities cq = centroidalMomentum(m, gs.q, gs.v);
  vector_t x(plannerStateDim(m));
  x.head<6>() = cq.h_com;
  x.segment<6>(6) = gs.q.head<6>();
  x.tail(m.n_j) = gs.q.tail(m.n_j);
  return x;
}

vector_t dynamicsFlow(const RobotModel& m, const vector_t& x, const vector_t& u, const ClosedFlags& closed) {
  return dynamicsFlow(m, makeNodeEval(m, x, u), x, u, closed);
}

vector_t dynamicsFlow(const RobotModel& m, const NodeEval& ctx, const vector_t& x, const vector_t& u,
                      const ClosedFlags& closed) {
  checkPlannerDims(m, x, u);
  vector_t xdot(plannerStateDim(m));
  vector3_t force_sum = m.total_mass * kGravityVector;
  vector3_t moment_sum = vector3_t::Zero();
  for (int c = 0; c < kNumContacts; ++c) {
    if (!closed[static_cast<size_t>(c)]) continue;
    const vector3_t f = u.segment<3>(3 * c);
    force_sum += f;
    moment_sum += (ctx.fk.contact_positions[static_cast<size_t>(c)] - ctx.cq.com_position).cross(f);
  }
  xdot.head<3>() = force_sum;
  xdot.segment<3>(3) = moment_sum;
  xdot.segment<3>(6) = ctx.v_b.head<3>();
  xdot.segment<3>(9) = eulerRatesFromAngularVelocity(x.segment<3>(9), ctx.v_b.tail<3>());
  xdot.tail(m.n_j) = u.tail(m.n_j);
  return xdot;
}

void flowJacobians(const RobotModel& m, const vector_t& x, const vector_t& u, const ClosedFlags& closed,
                   matrix_t& f_x, matrix_t& f_u) {
  flowJacobians(m, makeNodeEval(m, x, u), x, u, closed, f_x, f_u);
}

void flowJacobians(const RobotModel& m, const NodeEval& ctx, const vector_t& x, const vector_t& u,
                   const ClosedFlags& closed, matrix_t& f_x, matrix_t& f_u) {
  checkPlannerDims(m, x, u);
  const int nx = plannerStateDim(m);
  const int nu = plannerInputDim(m);

  f_x = matrix_t::Zero(nx, nx);
  f_u = matrix_t::Zero(nx, nu);

  // coordinate jacobian scaling: d(point)/d(q_b euler) goes through E
  const matrix3_t E = eulerRateMatrixZyx(x.segment<3>(9));
  auto toCoords = [&](const matrix_t& J_vel) {
    matrix_t J = J_vel;
    J.middleCols<3>(3) = J_vel.middleCols<3>(3) * E;
    return J;
  };

  // CoM jacobian = linear momentum rows of the CMM / total mass
  matrix_t J_com(3, m.nv());
  J_com.leftCols<6>() = ctx.cq.A_b.topRows<3>() / m.total_mass;
  J_com.rightCols(m.n_j) = ctx.cq.A_j.topRows<3>() / m.total_mass;
  const matrix_t J_com_coords = toCoords(J_com);

  for (int c = 0; c < kNumContacts; ++c) {
    if (!closed[static_cast<size_t>(c)]) continue;
    const vector3_t f = u.segment<3>(3 * c);
    const vector3_t r = ctx.fk.contact_positions[static_cast<size_t>(c)] - ctx.cq.com_position;
    // d(h_dot)/df
    f_u.block<3, 3>(0, 3 * c).setIdentity();
    f_u.block<3, 3>(3, 3 * c) = skew(r);
    // d(moment)/dq through the contact and CoM positions
    const matrix_t J_ci_coords = toCoords(contactJacobian(m, ctx.fk, c));
    f_x.block(3, 6, 3, 6 + m.n_j) -= skew(f) * (J_ci_coords - J_com_coords).rightCols(6 + m.n_j);
  }

  // base coordinate rates: qdot_b = blkdiag(I, E^{-1}) A_b^{-1} (h - A_j v_j)
  matrix_t D_inv = matrix_t::Identity(6, 6);
  D_inv.bottomRightCorner<3, 3>() = E.inverse();
  const matrix_t dqb_dh = D_inv * ctx.ab_lu.solve(matrix6_t::Identity());
  f_x.block(6, 0, 6, 6) = dqb_dh;
  f_u.block(6, 3 * kNumContacts, 6, m.n_j) = -dqb_dh * ctx.cq.A_j;

  f_u.block(12, 3 * kNumContacts, m.n_j, m.n_j).setIdentity();
}

vector_t inequalityValues(const RobotModel& m, const OcpConfig& cfg, const vector_t& x, const vector_t& u,
                          const ClosedFlags& closed) {
  checkPlannerDims(m, x, u);
  const vector_t q = coordinatesFromPlannerState(m, x);
  const ForwardKinematics fk = forwardKinematics(m, q);
  const double fz_max = cfg.fz_max > 0.0 ? cfg.fz_max : 1.5 * m.total_mass * kGravity;

  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(3 * kNumContacts + 4 * m.n_j + 4));
  for (int c = 0; c < kNumContacts; ++c) {
    if (!closed[static_cast<size_t>(c)]) continue;
    const vector3_t f = u.segment<3>(3 * c);
    vals.push_back(cfg.mu_s * f.z() - std::sqrt(f.x() * f.x() + f.y() * f.y()));
  }
  for (int c = 0; c < kNumContacts; ++c) {
    if (!closed[static_cast<size_t>(c)]) continue;
    const double fz = u[3 * c + 2];
    vals.push_back(fz);
    vals.push_back(fz_max - fz);
  }
  const vector_t q_j = x.tail(m.n_j);
  const vector_t v_j = u.tail(m.n_j);
  for (int j = 0; j < m.n_j; ++j) vals.push_back(q_j[j] - m.limits.q_min[j]);
  for (int j = 0; j < m.n_j; ++j) vals.push_back(m.limits.q_max[j] - q_j[j]);
  for (int j = 0; j < m.n_j; ++j) vals.push_back(v_j[j] + m.limits.v_max[j]);
  for (int j = 0; j < m.n_j; ++j) vals.push_back(m.limits.v_max[j] - v_j[j]);
  // cross-foot point pairs: (L_toe,R_toe), (L_toe,R_heel), (L_heel,R_toe), (L_heel,R_heel)
  for (int i = 0; i < 2; ++i) {
    for (int j = 2; j < 4; ++j) {
      const vector3_t d = fk.contact_positions[static_cast<size_t>(i)] - fk.contact_positions[static_cast<size_t>(j)];
      vals.push_back(d.squaredNorm() - cfg.eps_feet);
    }
  }
  return Eigen::Map<vector_t>(vals.data(), static_cast<long>(vals.size()));
}

StageCost stageCost(const RobotModel& m, const OcpConfig& cfg, const vector_t& x, const vector_t& u,
                    const vector_t& x_ref, const vector_t& u_ref, const ClosedFlags& closed) {
  return stageCost(m, cfg, makeNodeEval(m, x, u), x, u, x_ref, u_ref, closed);
}

StageCost stageCost(const RobotModel& m, const OcpConfig& cfg, const NodeEval& ev, const vector_t& x,
                    const vector_t& u, const vector_t& x_ref, const vector_t& u_ref, const ClosedFlags& closed) {
  checkPlannerDims(m, x, u);
  const int nx = plannerStateDim(m);
  const int nu = plannerInputDim(m);

  StageCost out;
  out.grad_x = vector_t::Zero(nx);
  out.grad_u = vector_t::Zero(nu);
  out.hess_xx = matrix_t::Zero(nx, nx);
  out.hess_uu = matrix_t::Zero(nu, nu);

  vector_t wq(nx);
  wq.head<6>().setConstant(cfg.q_momentum);
  wq.segment<6>(6).setConstant(cfg.q_base_pose);
  wq.tail(m.n_j).setConstant(cfg.q_joints);
  vector_t wr(nu);
  wr.head<12>().setConstant(cfg.r_forces);
  wr.tail(m.n_j).setConstant(cfg.r_joint_vel);

  const vector_t ex = x - x_ref;
  const vector_t eu = u - u_ref;
  out.value += ex.dot(wq.asDiagonal() * ex) + eu.dot(wr.asDiagonal() * eu);
  out.grad_x += 2.0 * wq.asDiagonal() * ex;
  out.grad_u += 2.0 * wr.asDiagonal() * eu;
  out.hess_xx += 2.0 * matrix_t(wq.asDiagonal());
  out.hess_uu += 2.0 * matrix_t(wr.asDiagonal());

  // barrier terms; rows are pure-x or pure-u, so no cross blocks appear
  const double fz_max = cfg.fz_max > 0.0 ? cfg.fz_max : 1.5 * m.total_mass * kGravity;
  auto addU = [&](double h, const vector_t& dh) {
    const BarrierEval b = rbfPenalty(h, cfg.xi_rbf, cfg.delta_rbf);
    out.value += b.value;
    out.grad_u += b.d1 * dh;
    out.hess_uu += std::max(b.d2, 0.0) * (dh * dh.transpose());
  };
  auto addX = [&](double h, const vector_t& dh) {
    const BarrierEval b = rbfPenalty(h, cfg.xi_rbf, cfg.delta_rbf);
    out.value += b.value;
    out.grad_x += b.d1 * dh;
    out.hess_xx += std::max(b.d2, 0.0) * (dh * dh.transpose());
  };

  for (int c = 0; c < kNumContacts; ++c) {
    if (!closed[static_cast<size_t>(c)]) continue;
    const vector3_t f = u.segment<3>(3 * c);
    const double s = std::sqrt(f.x() * f.x() + f.y() * f.y() + kFrictionSmoothing * kFrictionSmoothing);
    vector_t dh = vector_t::Zero(nu);
    dh[3 * c + 0] = -f.x() / s;
    dh[3 * c + 1] = -f.y() / s;
    dh[3 * c + 2] = cfg.mu_s;
    addU(cfg.mu_s * f.z() - s, dh);

    vector_t dz = vector_t::Zero(nu);
    dz[3 * c + 2] = 1.0;
    addU(f.z(), dz);
    addU(fz_max - f.z(), -dz);
  }
  for (int j = 0; j < m.n_j; ++j) {
    vector_t dq = vector_t::Zero(nx);
    dq[12 + j] = 1.0;
    addX(x[12 + j] - m.limits.q_min[j], dq);
    addX(m.limits.q_max[j] - x[12 + j], -dq);
    vector_t dv = vector_t::Zero(nu);
    dv[12 + j] = 1.0;
    addU(u[12 + j] + m.limits.v_max[j], dv);
    addU(m.limits.v_max[j] - u[12 + j], -dv);
  }
  {
    const ForwardKinematics& fk = ev.fk;
    const matrix3_t E = eulerRateMatrixZyx(x.segment<3>(9));
    for (int i = 0; i < 2; ++i) {
      for (int j = 2; j < 4; ++j) {
        const vector3_t d =
            fk.contact_positions[static_cast<size_t>(i)] - fk.contact_positions[static_cast<size_t>(j)];
        matrix_t Jd = contactJacobian(m, fk, i) - contactJacobian(m, fk, j);
        Jd.middleCols<3>(3) = Jd.middleCols<3>(3) * E;  // euler coordinates
        const vector_t g = 2.0 * (Jd.transpose() * d);
        // base translation cancels in the difference; orientation and joint
        // columns survive
        vector_t dh = vector_t::Zero(nx);
        dh.segment<3>(9) = g.segment<3>(3);
        dh.tail(m.n_j) = g.tail(m.n_j);
        addX(d.squaredNorm() - cfg.eps_feet, dh);
      }
    }
  }
  return out;
}

const SwingReference* SwingRefSet::activeRef(int foot, double t) const {
  for (const SwingReference& r : per_foot[static_cast<size_t>(foot)]) {
    if (t >= r.tLiftoff() - 1e-9 && t <= r.tTouchdown() + 1e-9) return &r;
  }
  return nullptr;
}

vector_t equalityResiduals(const RobotModel& m, const vector_t& x, const vector_t& u, const ClosedFlags& closed,
                           const SwingRefSet& swing, double t, bool include_input_rows) {
  return equalityResiduals(m, makeNodeEval(m, x, u), x, u, closed, swing, t, include_input_rows);
}

vector_t equalityResiduals(const RobotModel& m, const NodeEval& ev, const vector_t& x, const vector_t& u,
                           const ClosedFlags& closed, const SwingRefSet& swing, double t,
                           bool include_input_rows) {
  checkPlannerDims(m, x, u);
  const ForwardKinematics& fk = ev.fk;

  std::vector<double> rows;
  rows.reserve(12 * 3);
  auto push3 = [&](const vector3_t& r) {
    rows.push_back(r.x());
    rows.push_back(r.y());
    rows.push_back(r.z());
  };
  if (include_input_rows) {
    const vector_t& v = ev.v;
    for (int c = 0; c < kNumContacts; ++c) {
      if (closed[static_cast<size_t>(c)]) {
        push3(contactJacobian(m, fk, c) * v);
      }
    }
    for (int c = 0; c < kNumContacts; ++c) {
      if (closed[static_cast<size_t>(c)]) continue;
      push3(u.segment<3>(3 * c));
      const SwingReference* ref = swing.activeRef(footOfContact(c), t);
      if (ref == nullptr) continue;
      push3(fk.contact_positions[static_cast<size_t>(c)] - ref->pointPosition(c, t));
      push3(contactJacobian(m, fk, c) * v - ref->pointVelocity(c, t));
    }
  } else {
    for (int c = 0; c < kNumContacts; ++c) {
      if (closed[static_cast<size_t>(c)]) continue;
      const SwingReference* ref = swing.activeRef(footOfContact(c), t);
      if (ref == nullptr) continue;
      push3(fk.contact_positions[static_cast<size_t>(c)] - ref->pointPosition(c, t));
    }
  }
  if (rows.empty()) return vector_t();
  return Eigen::Map<vector_t>(rows.data(), static_cast<long>(rows.size()));
}

}  // namespace kdwbc
