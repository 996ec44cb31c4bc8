#include "kdwbc/planner.hpp"

#include <chrono>

#include "kdwbc/geometry.hpp"
#include "kdwbc/kinematics.hpp"
#include "kdwbc/ocp_qp.hpp"
#include "kdwbc/qp.hpp"

namespace kdwbc {

namespace {

constexpr double kDefectPenalty = 1e3;     // merit weight on dynamics defects
constexpr double kEqualityPenalty = 1e3;   // merit weight on mode equalities
constexpr double kFeasMargin = -1e-6;      // inequality filter
constexpr double kIkTol = 1e-10;

vector3_t footMid(const ForwardKinematics& fk, int foot) {
  return 0.5 * (fk.contact_positions[static_cast<size_t>(2 * foot)] +
                fk.contact_positions[static_cast<size_t>(2 * foot + 1)]);
}

}  // namespace

ClosedFlags Plan::closedAt(double t) const {
  ClosedFlags f{};
  for (int c = 0; c < kNumContacts; ++c) f[static_cast<size_t>(c)] = schedule.closed(c, t);
  return f;
}

PlanSample interpolate(const Plan& plan, double t) {
  if (plan.empty()) throw std::invalid_argument("interpolate: empty plan");
  PlanSample out;
  const int N = static_cast<int>(plan.us.size());
  double s = (t - plan.t0) / plan.node_dt;
  out.clamped = s < 0.0 || s > static_cast<double>(N);
  s = std::clamp(s, 0.0, static_cast<double>(N));
  const int k = std::min(static_cast<int>(s), N - 1);
  const double a = std::clamp(s - k, 0.0, 1.0);

  out.x = (1.0 - a) * plan.xs[static_cast<size_t>(k)] + a * plan.xs[static_cast<size_t>(k) + 1];
  out.v = (1.0 - a) * plan.vs[static_cast<size_t>(k)] + a * plan.vs[static_cast<size_t>(k) + 1];
  const vector_t& u0 = plan.us[static_cast<size_t>(k)];
  const vector_t& u1 = plan.us[static_cast<size_t>(std::min(k + 1, N - 1))];
  out.u = (1.0 - a) * u0 + a * u1;
  const ClosedFlags closed = plan.closedAt(t);
  for (int c = 0; c < kNumContacts; ++c) {
    if (!closed[static_cast<size_t>(c)]) out.u.segment<3>(3 * c).setZero();
  }
  return out;
}

KinoDynamicsPlanner::KinoDynamicsPlanner(const RobotModel& model, OcpConfig config, Terrain terrain,
                                         GaitSettings gait)
    : model_(model), config_(std::move(config)), terrain_(std::move(terrain)), gait_(gait) {
  config_.validate();
  if (config_.fz_max <= 0.0) config_.fz_max = 1.5 * model_.total_mass * kGravity;
}

ContactSchedule KinoDynamicsPlanner::schedule() const {
  ContactSchedule s = scheduleGait(gait_.mode, gait_.walk_start_time, gait_.stance_time, gait_.swing_time);
  s.walk_start = gait_.walk_start_time;
  return s;
}

void KinoDynamicsPlanner::reset(double t0, const GeneralizedState& measured) {
  ref_time_ = t0;
  ref_x_ = measured.q[0];
  ref_y_ = measured.q[1];
  ref_yaw_ = measured.q[3];
  active_swing_ = {std::nullopt, std::nullopt};
}

Eigen::Vector4d KinoDynamicsPlanner::referencePose(double t, const CommandFn& cmd) const {
  // extrapolate from the integrator state without mutating it
  double x = ref_x_, y = ref_y_, yaw = ref_yaw_;
  const double step = 0.002;
  double tc = ref_time_;
  while (tc < t - 1e-12) {
    const double h = std::min(step, t - tc);
    const CommandSample c = cmd(tc);
    x += h * c.vx;
    y += h * c.vy;
    yaw += h * c.yaw_rate;
    tc += h;
  }
  const CommandSample c = cmd(t);
  return {x, y, yaw, c.height + terrain_.height(x, y)};
}

vector_t KinoDynamicsPlanner::referenceState(double t, const CommandFn& cmd) const {
  const Eigen::Vector4d pose = referencePose(t, cmd);
  const CommandSample c = cmd(t);
  vector_t x = vector_t::Zero(plannerStateDim(model_));
  x.segment<3>(0) = model_.total_mass * vector3_t(c.vx, c.vy, 0.0);
  x[6] = pose[0];
  x[7] = pose[1];
  x[8] = pose[3];
  x[9] = pose[2];  // yaw; pitch/roll zero
  x.tail(model_.n_j) = model_.nominal_joints;
  return x;
}

vector_t KinoDynamicsPlanner::referenceInput(double t, const ContactSchedule& sched) const {
  vector_t u = vector_t::Zero(plannerInputDim(model_));
  int n_closed = 0;
  for (int c = 0; c < kNumContacts; ++c) n_closed += sched.closed(c, t) ? 1 : 0;
  if (n_closed > 0) {
    const double fz = model_.total_mass * kGravity / n_closed;
    for (int c = 0; c < kNumContacts; ++c) {
      if (sched.closed(c, t)) u[3 * c + 2] = fz;
    }
  }
  return u;
}

void KinoDynamicsPlanner::updateSwingReferences(double t_now, const GeneralizedState& measured,
                                                const CommandFn& cmd, const ContactSchedule& sched) {
  swing_ = SwingRefSet{};
  if (gait_.mode == GaitMode::Stand) {
    active_swing_ = {std::nullopt, std::nullopt};
    return;
  }
  const ForwardKinematics fk = forwardKinematics(model_, measured.q);
  const Eigen::Vector4d ref_pose = referencePose(t_now, cmd);

  for (int foot = 0; foot < 2; ++foot) {
    // effective desired velocity: command plus clamped position feedback
    auto desiredVelocityAt = [&](double t) {
      const CommandSample c = cmd(t);
      vector3_t v_des(c.vx, c.vy, 0.0);
      vector3_t err(ref_pose[0] - measured.q[0], ref_pose[1] - measured.q[1], 0.0);
      vector3_t fb = config_.position_feedback_gain * err;
      const double n = fb.norm();
      if (n > config_.position_feedback_clamp) fb *= config_.position_feedback_clamp / n;
      return vector3_t(v_des + fb);
    };
    const vector3_t v_meas(measured.v[0], measured.v[1], 0.0);

    // hip link: third joint on the chain to this foot's toe
    const std::vector<int> path = model_.supportingJoints(model_.contact(2 * foot).link);
    const int hip_link = model_.linkOfJoint(path.size() > 2 ? path[2] : path.front());
    const vector3_t hip_now = fk.poses[static_cast<size_t>(hip_link)].p;

    bool pos_cursor_valid = false;
    vector3_t pos_cursor = footMid(fk, foot);

    double lo, td;
    if (!sched.swingWindow(foot, t_now, lo, td)) continue;
    const double horizon_end = t_now + config_.horizon;
    while (lo < horizon_end) {
      const bool current = lo <= t_now && t_now < td;
      if (current) {
        const vector3_t mid_meas = footMid(fk, foot);
        const vector3_t toe_off = fk.contact_positions[static_cast<size_t>(2 * foot)] - mid_meas;
        const vector3_t heel_off = fk.contact_positions[static_cast<size_t>(2 * foot + 1)] - mid_meas;
        std::optional<SwingReference>& act = active_swing_[static_cast<size_t>(foot)];
        if (!act || std::abs(act->tLiftoff() - lo) > 1e-9) {
          // freeze the swing at its first cycle: liftoff at the measured
          // midpoint, footstep target from the heuristic
          const vector3_t v_des = desiredVelocityAt(lo);
          const CommandSample c = cmd(lo);
          const vector3_t target = planFootstep(hip_now, v_des, v_meas, vector3_t(0, 0, c.yaw_rate),
                                                sched.stance_time, config_.nominal_height, config_.capture_gain,
                                                terrain_);
          SwingReference ref(mid_meas, target, lo, td - lo, config_.apex_height);
          // flat touchdown pattern along the measured foot yaw
          const matrix3_t R_foot =
              fk.poses[static_cast<size_t>(model_.contact(2 * foot).link)].R;
          const double yaw = std::atan2(R_foot(1, 0), R_foot(0, 0));
          const vector3_t u_dir(std::cos(yaw), std::sin(yaw), 0.0);
          const double half_len = 0.5 * (model_.contact(2 * foot).offset.x() - model_.contact(2 * foot + 1).offset.x());
          ref.setTargetOffsets(half_len * u_dir, -half_len * u_dir);
          act = ref;
        }
        act->replanAnchor(t_now, mid_meas, toe_off, heel_off);
        swing_.per_foot[static_cast<size_t>(foot)].push_back(*act);
        pos_cursor = act->target();
        pos_cursor_valid = true;
      } else {
        // predicted future swing, rebuilt every cycle until it starts
        const vector3_t v_des = desiredVelocityAt(lo);
        const CommandSample c = cmd(lo);
        vector3_t hip_pred = hip_now + (lo - t_now) * vector3_t(c.vx, c.vy, 0.0);
        const vector3_t target = planFootstep(hip_pred, v_des, v_meas, vector3_t(0, 0, c.yaw_rate),
                                              sched.stance_time, config_.nominal_height, config_.capture_gain,
                                              terrain_);
        vector3_t liftoff_pos = pos_cursor;
        if (!pos_cursor_valid) {
          liftoff_pos.z() = terrain_.height(liftoff_pos.x(), liftoff_pos.y());
        }
        SwingReference ref(liftoff_pos, target, lo, td - lo, config_.apex_height);
        const double half_len = 0.5 * (model_.contact(2 * foot).offset.x() - model_.contact(2 * foot + 1).offset.x());
        const matrix3_t R_foot = fk.poses[static_cast<size_t>(model_.contact(2 * foot).link)].R;
        const double yaw = std::atan2(R_foot(1, 0), R_foot(0, 0));
        const vector3_t dir(std::cos(yaw), std::sin(yaw), 0.0);
        ref.setTargetOffsets(half_len * dir, -half_len * dir);
        swing_.per_foot[static_cast<size_t>(foot)].push_back(ref);
        pos_cursor = target;
        pos_cursor_valid = true;
      }
      // next window
      double nlo, ntd;
      if (!sched.swingWindow(foot, td + 1e-9, nlo, ntd) || nlo <= lo) break;
      lo = nlo;
      td = ntd;
    }
    // drop the frozen swing once its window has passed
    std::optional<SwingReference>& act = active_swing_[static_cast<size_t>(foot)];
    if (act && t_now >= act->tTouchdown() - 1e-9) act.reset();
  }
}

void KinoDynamicsPlanner::projectIterate(Iterate& it, const std::vector<double>& times,
                                         const std::vector<ClosedFlags>& closed) const {
  const int N = static_cast<int>(it.us.size());
  for (int k = 0; k <= N; ++k) {
    const double t = times[static_cast<size_t>(k)];
    const ClosedFlags& cf = closed[static_cast<size_t>(k)];

    // swing-position rows: Newton IK on the swing leg's joints (k >= 1; the
    // initial state is given)
    if (k >= 1) {
      for (int foot = 0; foot < 2; ++foot) {
        if (cf[static_cast<size_t>(2 * foot)]) continue;
        const SwingReference* ref = swing_.activeRef(foot, t);
        if (ref == nullptr) continue;
        const std::vector<int> leg = model_.supportingJoints(model_.contact(2 * foot).link);
        vector_t& x = it.xs[static_cast<size_t>(k)];
        for (int iter = 0; iter < 6; ++iter) {
          const vector_t q = coordinatesFromPlannerState(model_, x);
          const ForwardKinematics fk = forwardKinematics(model_, q);
          vector_t r(6);
          matrix_t J(6, static_cast<int>(leg.size()));
          for (int p = 0; p < 2; ++p) {
            const int ci = 2 * foot + p;
            r.segment<3>(3 * p) =
                fk.contact_positions[static_cast<size_t>(ci)] - ref->pointPosition(ci, t);
            const matrix_t Jc = contactJacobian(model_, fk, ci);
            for (size_t j = 0; j < leg.size(); ++j) {
              J.block<3, 1>(3 * p, static_cast<int>(j)) = Jc.col(6 + leg[j]);
            }
          }
          if (r.cwiseAbs().maxCoeff() < kIkTol) break;
          const vector_t dq = J.completeOrthogonalDecomposition().solve(r);
          for (size_t j = 0; j < leg.size(); ++j) {
            x[12 + leg[j]] -= dq[static_cast<int>(j)];
          }
        }
      }
    }

    // input rows: zero open-contact forces, then match contact/swing velocity
    // rows exactly with a minimum-norm joint-velocity correction
    if (k < N) {
      vector_t& u = it.us[static_cast<size_t>(k)];
      for (int c = 0; c < kNumContacts; ++c) {
        if (!cf[static_cast<size_t>(c)]) u.segment<3>(3 * c).setZero();
      }
      const vector_t& x = it.xs[static_cast<size_t>(k)];
      const vector_t q = coordinatesFromPlannerState(model_, x);
      const ForwardKinematics fk = forwardKinematics(model_, q);
      const CentroidalQuantities cq = centroidalMomentum(model_, q, vector_t::Zero(model_.nv()));
      const Eigen::PartialPivLU<matrix6_t> ab_lu(cq.A_b);

      std::vector<int> rows_c;
      for (int c = 0; c < kNumContacts; ++c) {
        if (cf[static_cast<size_t>(c)] || swing_.activeRef(footOfContact(c), t) != nullptr) rows_c.push_back(c);
      }
      if (rows_c.empty()) continue;
      matrix_t G(3 * static_cast<int>(rows_c.size()), model_.n_j);
      vector_t rhs(G.rows());
      for (size_t i = 0; i < rows_c.size(); ++i) {
        const int c = rows_c[i];
        const matrix_t Jc = contactJacobian(model_, fk, c);
        const matrix_t Jb = Jc.leftCols<6>();
        const matrix_t Jj = Jc.rightCols(model_.n_j);
        G.middleRows<3>(3 * static_cast<int>(i)) = Jj - Jb * ab_lu.solve(cq.A_j);
        vector3_t target = vector3_t::Zero();
        if (!cf[static_cast<size_t>(c)]) {
          target = swing_.activeRef(footOfContact(c), t)->pointVelocity(c, t);
        }
        rhs.segment<3>(3 * static_cast<int>(i)) = target - Jb * ab_lu.solve(x.head<6>());
      }
      const vector_t v_j = u.tail(model_.n_j);
      const vector_t corr = G.completeOrthogonalDecomposition().solve(rhs - G * v_j);
      u.tail(model_.n_j) = v_j + corr;
    }
  }
}

double KinoDynamicsPlanner::merit(const Iterate& it, const std::vector<double>& times,
                                  const std::vector<ClosedFlags>& closed, const std::vector<vector_t>& x_refs,
                                  const std::vector<vector_t>& u_refs) const {
  const int N = static_cast<int>(it.us.size());
  const double dt = config_.nodeDt();
  double value = 0.0;
  for (int k = 0; k < N; ++k) {
    const size_t ks = static_cast<size_t>(k);
    const NodeEval ev = makeNodeEval(model_, it.xs[ks], it.us[ks]);
    const StageCost sc = stageCost(model_, config_, ev, it.xs[ks], it.us[ks], x_refs[ks], u_refs[ks], closed[ks]);
    value += sc.value;
    const vector_t defect =
        it.xs[ks] + dt * dynamicsFlow(model_, ev, it.xs[ks], it.us[ks], closed[ks]) - it.xs[ks + 1];
    value += kDefectPenalty * defect.cwiseAbs().sum();
    const vector_t g = equalityResiduals(model_, ev, it.xs[ks], it.us[ks], closed[ks], swing_, times[ks]);
    value += kEqualityPenalty * g.cwiseAbs().sum();
  }
  // terminal tracking
  const size_t Ns = static_cast<size_t>(N);
  const StageCost tc =
      stageCost(model_, config_, it.xs[Ns], u_refs[Ns - 1], x_refs[Ns], u_refs[Ns - 1], closed[Ns]);
  value += tc.value;
  return value;
}

bool KinoDynamicsPlanner::feasible(const Iterate& it, const std::vector<ClosedFlags>& closed) const {
  const int N = static_cast<int>(it.us.size());
  for (int k = 0; k < N; ++k) {
    const size_t ks = static_cast<size_t>(k);
    const vector_t h = inequalityValues(model_, config_, it.xs[ks], it.us[ks], closed[ks]);
    if (k == 0) {
      // the measured initial state is not a decision variable; check only the
      // input-dependent rows there
      const vector_t h_u = h;  // joint-position rows sit in the middle; filter below
      int idx = 0;
      int n_closed = 0;
      for (bool b : closed[ks]) n_closed += b ? 1 : 0;
      const int friction_rows = n_closed;
      const int fz_rows = 2 * n_closed;
      for (int i = 0; i < friction_rows + fz_rows; ++i) {
        if (h_u[idx++] < kFeasMargin) return false;
      }
      idx += 2 * model_.n_j;  // skip joint-position margins
      for (int i = 0; i < 2 * model_.n_j; ++i) {
        if (h_u[idx++] < kFeasMargin) return false;
      }
      continue;
    }
    if (h.minCoeff() < kFeasMargin) return false;
  }
  return true;
}

Plan KinoDynamicsPlanner::solve(double t_now, const GeneralizedState& measured, const CommandFn& cmd,
                                const Plan* warm_start) {
  const auto t_start = std::chrono::steady_clock::now();
  measured.validate(model_);

  // advance the reference pose integrator
  {
    const double step = 0.002;
    while (ref_time_ < t_now - 1e-12) {
      const double h = std::min(step, t_now - ref_time_);
      const CommandSample c = cmd(ref_time_);
      ref_x_ += h * c.vx;
      ref_y_ += h * c.vy;
      ref_yaw_ += h * c.yaw_rate;
      ref_time_ += h;
    }
  }

  const ContactSchedule sched = schedule();
  updateSwingReferences(t_now, measured, cmd, sched);

  const int N = config_.nodes;
  const double dt = config_.nodeDt();
  std::vector<double> times(static_cast<size_t>(N) + 1);
  std::vector<ClosedFlags> closed(static_cast<size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) {
    times[static_cast<size_t>(k)] = t_now + k * dt;
    for (int c = 0; c < kNumContacts; ++c) {
      closed[static_cast<size_t>(k)][static_cast<size_t>(c)] = sched.closed(c, times[static_cast<size_t>(k)] + 1e-9);
    }
  }

  std::vector<vector_t> x_refs(static_cast<size_t>(N) + 1), u_refs(static_cast<size_t>(N));
  for (int k = 0; k <= N; ++k) x_refs[static_cast<size_t>(k)] = referenceState(times[static_cast<size_t>(k)], cmd);
  for (int k = 0; k < N; ++k) u_refs[static_cast<size_t>(k)] = referenceInput(times[static_cast<size_t>(k)] + 1e-9, sched);

  // seed
  Iterate cur;
  cur.xs.resize(static_cast<size_t>(N) + 1);
  cur.us.resize(static_cast<size_t>(N));
  const vector_t x0 = plannerStateOfMeasurement(model_, measured);
  if (warm_start != nullptr && !warm_start->empty()) {
    for (int k = 0; k <= N; ++k) {
      const PlanSample s = interpolate(*warm_start, times[static_cast<size_t>(k)]);
      cur.xs[static_cast<size_t>(k)] = s.x;
      if (k < N) cur.us[static_cast<size_t>(k)] = s.u;
    }
  } else {
    for (int k = 0; k <= N; ++k) cur.xs[static_cast<size_t>(k)] = x0;
    for (int k = 0; k < N; ++k) cur.us[static_cast<size_t>(k)] = u_refs[static_cast<size_t>(k)];
  }
  cur.xs[0] = x0;
  // joint velocities at the first node stay pinned to the measurement (the
  // projection below applies the minimal contact-consistent correction);
  // a free u0 would teleport the base velocity through the momentum map and
  // feed the tracking controller a fictitious velocity jump
  cur.us[0].tail(model_.n_j) = measured.v.tail(model_.n_j);

  Plan plan;
  plan.t0 = t_now;
  plan.node_dt = dt;
  plan.times = times;
  plan.schedule = sched;
  plan.swing = swing_;

  projectIterate(cur, times, closed);
  double phi = 0.0;
  try {
    phi = merit(cur, times, closed, x_refs, u_refs);
  } catch (const FlowError&) {
    plan.flow_singular = true;
    phi = std::numeric_limits<double>::infinity();
  }
  plan.merit_sequence.push_back(phi);

  const int nu_full = plannerInputDim(model_);
  const int nx = plannerStateDim(model_);

  for (int iter = 0; iter < config_.max_sqp_iterations && !plan.flow_singular; ++iter) {
    // assemble the per-node QP stages with the mode equalities eliminated
    OcpQp ocp;
    ocp.x0 = vector_t::Zero(nx);
    std::vector<std::vector<int>> u_cols(static_cast<size_t>(N));
    std::vector<matrix_t> N_bases(static_cast<size_t>(N));
    std::vector<vector_t> du_particular(static_cast<size_t>(N));
    bool assembled = true;

    for (int k = 0; k < N && assembled; ++k) {
      const size_t ks = static_cast<size_t>(k);
      const vector_t& xk = cur.xs[ks];
      const vector_t& uk = cur.us[ks];
      try {
        const NodeEval ev = makeNodeEval(model_, xk, uk);
        matrix_t f_x, f_u;
        flowJacobians(model_, ev, xk, uk, closed[ks], f_x, f_u);
        const StageCost sc = stageCost(model_, config_, ev, xk, uk, x_refs[ks], u_refs[ks], closed[ks]);

        // active input columns: closed-contact forces plus joint velocities;
        // node 0 keeps its joint velocities pinned to the measurement
        std::vector<int>& cols = u_cols[ks];
        for (int c = 0; c < kNumContacts; ++c) {
          if (closed[ks][static_cast<size_t>(c)]) {
            cols.push_back(3 * c);
            cols.push_back(3 * c + 1);
            cols.push_back(3 * c + 2);
          }
        }
        if (k > 0) {
          for (int j = 0; j < model_.n_j; ++j) cols.push_back(3 * kNumContacts + j);
        }

        const int nu = static_cast<int>(cols.size());
        matrix_t B_red(nx, nu), R_red(nu, nu);
        vector_t r_red(nu);
        for (int a = 0; a < nu; ++a) {
          B_red.col(a) = dt * f_u.col(cols[static_cast<size_t>(a)]);
          r_red[a] = sc.grad_u[cols[static_cast<size_t>(a)]];
          for (int b = 0; b < nu; ++b) {
            R_red(a, b) = sc.hess_uu(cols[static_cast<size_t>(a)], cols[static_cast<size_t>(b)]);
          }
        }
        const matrix_t A_mat = matrix_t::Identity(nx, nx) + dt * f_x;

        // velocity-level equality rows: affine in the joint rates at fixed x
        const ForwardKinematics& fk = ev.fk;
        const CentroidalQuantities& cq = ev.cq;
        const Eigen::PartialPivLU<matrix6_t>& ab_lu = ev.ab_lu;
        std::vector<int> rows_c;
        if (k > 0) {  // node-0 velocity rows are constants (u0 joint rates pinned)
          for (int c = 0; c < kNumContacts; ++c) {
            if (closed[ks][static_cast<size_t>(c)] || swing_.activeRef(footOfContact(c), times[ks]) != nullptr) {
              rows_c.push_back(c);
            }
          }
        }
        matrix_t E = matrix_t::Zero(3 * static_cast<int>(rows_c.size()), nu);
        vector_t g = vector_t::Zero(E.rows());
        const vector_t& v_full = ev.v;
        for (size_t i = 0; i < rows_c.size(); ++i) {
          const int c = rows_c[i];
          const matrix_t Jc = contactJacobian(model_, fk, c);
          const matrix_t G = Jc.rightCols(model_.n_j) - Jc.leftCols<6>() * ab_lu.solve(cq.A_j);
          // joint-velocity columns sit at the tail of the reduced input
          E.block(3 * static_cast<int>(i), nu - model_.n_j, 3, model_.n_j) = G;
          vector3_t target = vector3_t::Zero();
          if (!closed[ks][static_cast<size_t>(c)]) {
            target = swing_.activeRef(footOfContact(c), times[ks])->pointVelocity(c, times[ks]);
          }
          g.segment<3>(3 * static_cast<int>(i)) = Jc * v_full - target;
        }

        matrix_t Nb = nullspaceBasis(E);
        vector_t du_p = vector_t::Zero(nu);
        if (E.rows() > 0) {
          du_p = -E.completeOrthogonalDecomposition().solve(g);
        }
        N_bases[ks] = Nb;
        du_particular[ks] = du_p;

        OcpQpStage st;
        st.A = A_mat;
        st.B = B_red * Nb;
        const vector_t defect = xk + dt * dynamicsFlow(model_, ev, xk, uk, closed[ks]) - cur.xs[ks + 1];
        st.c = defect + B_red * du_p;
        st.Q = sc.hess_xx;
        st.q = sc.grad_x;
        st.R = Nb.transpose() * R_red * Nb + 1e-9 * matrix_t::Identity(Nb.cols(), Nb.cols());
        st.r = Nb.transpose() * (r_red + R_red * du_p);
        st.S = matrix_t::Zero(Nb.cols(), nx);

        // swing position rows as a stiff penalty on this node's state (k >= 1)
        if (k >= 1) {
          for (int c = 0; c < kNumContacts; ++c) {
            if (closed[ks][static_cast<size_t>(c)]) continue;
            const SwingReference* ref = swing_.activeRef(footOfContact(c), times[ks]);
            if (ref == nullptr) continue;
            const vector3_t r_pos = fk.contact_positions[static_cast<size_t>(c)] - ref->pointPosition(c, times[ks]);
            matrix_t Jc = contactJacobian(model_, fk, c);
            Jc.middleCols<3>(3) = Jc.middleCols<3>(3) * eulerRateMatrixZyx(xk.segment<3>(9));
            matrix_t Jx = matrix_t::Zero(3, nx);
            Jx.middleCols(6, 6 + model_.n_j) = Jc;
            st.Q += 2.0 * config_.constraint_penalty * Jx.transpose() * Jx;
            st.q += 2.0 * config_.constraint_penalty * Jx.transpose() * r_pos;
          }
        }
        ocp.stages.push_back(std::move(st));
      } catch (const FlowError&) {
        assembled = false;
      }
    }
    if (!assembled) {
      plan.flow_singular = true;
      break;
    }

    // terminal cost
    {
      const size_t Ns = static_cast<size_t>(N);
      const StageCost tc =
          stageCost(model_, config_, cur.xs[Ns], u_refs[Ns - 1], x_refs[Ns], u_refs[Ns - 1], closed[Ns]);
      ocp.Q_final = tc.hess_xx;
      ocp.q_final = tc.grad_x;
      const vector_t qN = coordinatesFromPlannerState(model_, cur.xs[Ns]);
      const ForwardKinematics fkN = forwardKinematics(model_, qN);
      for (int c = 0; c < kNumContacts; ++c) {
        if (closed[Ns][static_cast<size_t>(c)]) continue;
        const SwingReference* ref = swing_.activeRef(footOfContact(c), times[Ns]);
        if (ref == nullptr) continue;
        const vector3_t r_pos = fkN.contact_positions[static_cast<size_t>(c)] - ref->pointPosition(c, times[Ns]);
        matrix_t Jc = contactJacobian(model_, fkN, c);
        Jc.middleCols<3>(3) = Jc.middleCols<3>(3) * eulerRateMatrixZyx(cur.xs[Ns].segment<3>(9));
        matrix_t Jx = matrix_t::Zero(3, nx);
        Jx.middleCols(6, 6 + model_.n_j) = Jc;
        ocp.Q_final += 2.0 * config_.constraint_penalty * Jx.transpose() * Jx;
        ocp.q_final += 2.0 * config_.constraint_penalty * Jx.transpose() * r_pos;
      }
    }

    OcpQpSolution sol;
    try {
      sol = solveOcpQp(ocp);
    } catch (const QpError&) {
      plan.line_search_failed = true;
      break;
    }

    // line search with projection inside each trial
    bool accepted = false;
    for (double alpha : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
      Iterate cand = cur;
      for (int k = 1; k <= N; ++k) {
        cand.xs[static_cast<size_t>(k)] += alpha * sol.xs[static_cast<size_t>(k)];
      }
      for (int k = 0; k < N; ++k) {
        const size_t ks = static_cast<size_t>(k);
        const vector_t du_red = du_particular[ks] + N_bases[ks] * sol.us[ks];
        for (size_t a = 0; a < u_cols[ks].size(); ++a) {
          cand.us[ks][u_cols[ks][a]] += alpha * du_red[static_cast<int>(a)];
        }
      }
      try {
        projectIterate(cand, times, closed);
        if (!feasible(cand, closed)) continue;
        const double phi_cand = merit(cand, times, closed, x_refs, u_refs);
        if (phi_cand <= phi) {
          cur = std::move(cand);
          const double improvement = phi - phi_cand;
          phi = phi_cand;
          plan.merit_sequence.push_back(phi);
          plan.sqp_iterations = iter + 1;
          accepted = true;
          if (improvement < 1e-9 * std::max(1.0, std::abs(phi))) iter = config_.max_sqp_iterations;  // converged
          break;
        }
      } catch (const FlowError&) {
        continue;
      }
    }
    if (!accepted) {
      plan.line_search_failed = true;
      break;
    }
  }
  plan.hit_iteration_cap = plan.sqp_iterations >= config_.max_sqp_iterations;

  plan.xs = cur.xs;
  plan.us = cur.us;
  plan.x_refs = x_refs;
  plan.vs.resize(static_cast<size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) {
    const vector_t& u = cur.us[static_cast<size_t>(std::min(k, N - 1))];
    plan.vs[static_cast<size_t>(k)] = generalizedVelocityFromPlanner(model_, cur.xs[static_cast<size_t>(k)], u);
  }
  plan.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  return plan;
}

}  // namespace kdwbc
