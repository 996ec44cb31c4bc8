#include <gtest/gtest.h>

#include "kdwbc/barrier.hpp"
#include "kdwbc/footstep.hpp"
#include "kdwbc/gait.hpp"
#include "kdwbc/ocp.hpp"
#include "kdwbc/planner.hpp"
#include "kdwbc/swing.hpp"
#include "test_util.hpp"

using namespace kdwbc;

namespace {

vector_t standingPlannerState(const RobotModel& m) {
  vector_t x = vector_t::Zero(plannerStateDim(m));
  x[8] = 0.9012816;
  x.tail(m.n_j) = m.nominal_joints;
  return x;
}

ClosedFlags allClosed() { return {true, true, true, true}; }

}  // namespace

TEST(Footstep, RaibertTermOnly) {
  const vector3_t hip(0.1, 0.2, 0.8);
  const vector3_t v(1, 0, 0);
  const vector3_t p = planFootstep(hip, v, v, vector3_t::Zero(), 0.35, 0.8, 0.15, Terrain{});
  EXPECT_NEAR(p.x() - hip.x(), 0.175, 1e-12);
  EXPECT_NEAR(p.y() - hip.y(), 0.0, 1e-12);
  EXPECT_EQ(p.z(), 0.0);  // projected to flat terrain
}

TEST(Footstep, AllVelocitiesZero) {
  const vector3_t hip(0.3, -0.1, 0.8);
  const vector3_t p =
      planFootstep(hip, vector3_t::Zero(), vector3_t::Zero(), vector3_t::Zero(), 0.35, 0.9, 0.15, Terrain{});
  EXPECT_NEAR((p.head<2>() - hip.head<2>()).norm(), 0.0, 1e-12);
  EXPECT_EQ(p.z(), 0.0);
}

TEST(Footstep, CentrifugalTerm) {
  const vector3_t hip = vector3_t::Zero();
  const vector3_t v_meas(1, 0, 0);
  const vector3_t w_des(0, 0, 1);
  // sqrt(0.8/9.81) * (1,0,0) x (0,0,1) = 0.285568... * (0,-1,0)
  const vector3_t p = planFootstep(hip, vector3_t::Zero(), v_meas, w_des, 0.35, 0.8, 0.0, Terrain{});
  EXPECT_NEAR(p.y(), -std::sqrt(0.8 / 9.81), 1e-9);
  EXPECT_NEAR(p.x(), 0.0, 1e-12);
}

TEST(Footstep, TermByTermComposition) {
  // output equals the independently summed Raibert + capture + centrifugal terms
  const vector3_t hip(0.4, 0.1, 0.7);
  const vector3_t v_des(0.5, -0.2, 0.0), v_meas(0.8, 0.1, 0.0), w_des(0, 0, 0.4);
  const double dt = 0.4, h = 0.85, k = 0.15;
  Terrain terr;
  terr.steps = {{0.2, 0.05}};
  const vector3_t capture = 0.5 * dt * v_des + k * (v_meas - v_des);
  const vector3_t centrifugal = std::sqrt(h / kGravity) * v_meas.cross(w_des);
  vector3_t expect = hip + capture + centrifugal;
  expect.z() = terr.height(expect.x(), expect.y());
  const vector3_t p = planFootstep(hip, v_des, v_meas, w_des, dt, h, k, terr);
  EXPECT_EQ((p - expect).norm(), 0.0);
}

TEST(Swing, CubicSymmetryAndApex) {
  SwingReference ref(vector3_t::Zero(), vector3_t(0.3, 0, 0), 0.0, 0.35, 0.08);
  EXPECT_NEAR(ref.position(0.175).x(), 0.15, 1e-12);
  EXPECT_NEAR(ref.position(0.175).z(), 0.08, 1e-12);
  EXPECT_NEAR((ref.position(0.0) - vector3_t::Zero()).norm(), 0.0, 1e-12);
  EXPECT_NEAR((ref.position(0.35) - vector3_t(0.3, 0, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(ref.velocity(0.0).norm(), 0.0, 1e-12);
  EXPECT_NEAR(ref.velocity(0.35).norm(), 0.0, 1e-12);
  // clamped outside the window
  EXPECT_NEAR((ref.position(-0.1) - ref.position(0.0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((ref.position(0.5) - ref.position(0.35)).norm(), 0.0, 1e-12);
}

TEST(Swing, ApexAboveHigherEndpoint) {
  SwingReference ref(vector3_t(0, 0, 0), vector3_t(0.3, 0, 0.10), 0.0, 0.4, 0.08);
  EXPECT_NEAR(ref.position(0.2).z(), 0.18, 1e-12);
}

TEST(Swing, VelocityMatchesFiniteDifference) {
  SwingReference ref(vector3_t(0.1, -0.2, 0.0), vector3_t(0.4, 0.1, 0.05), 1.0, 0.35, 0.08);
  const double h = 1e-7;
  for (double t = 1.02; t < 1.34; t += 0.03) {
    const vector3_t fd = (ref.position(t + h) - ref.position(t - h)) / (2 * h);
    EXPECT_NEAR((fd - ref.velocity(t)).norm(), 0.0, 1e-6) << "t=" << t;
  }
}

TEST(Swing, ReplanAnchorPassesThroughMeasured) {
  SwingReference ref(vector3_t::Zero(), vector3_t(0.3, 0, 0), 0.0, 0.35, 0.08);
  ref.setTargetOffsets(vector3_t(0.11, 0, 0), vector3_t(-0.11, 0, 0));
  const vector3_t mid_meas(0.05, 0.01, 0.03);
  const vector3_t toe_off(0.109, 0.002, 0.001), heel_off(-0.109, -0.002, -0.001);
  ref.replanAnchor(0.1, mid_meas, toe_off, heel_off);
  EXPECT_NEAR((ref.position(0.1) - mid_meas).norm(), 0.0, 1e-12);
  EXPECT_NEAR((ref.pointPosition(0, 0.1) - (mid_meas + toe_off)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((ref.pointPosition(1, 0.1) - (mid_meas + heel_off)).norm(), 0.0, 1e-12);
  // touchdown unchanged: target plus the rigid flat pattern
  EXPECT_NEAR((ref.pointPosition(0, 0.35) - (ref.target() + vector3_t(0.11, 0, 0))).norm(), 0.0, 1e-12);
}

TEST(Barrier, LogRegion) {
  const BarrierEval b = rbfPenalty(1.0, 1.0, 0.1);
  EXPECT_NEAR(b.value, 0.0, 1e-15);
  EXPECT_NEAR(b.d1, -1.0, 1e-15);
}

TEST(Barrier, ContinuityAtDelta) {
  // one-sided limits at h = delta: both branches against the hand-computed
  // values -xi*ln(delta), -xi/delta, xi/delta^2
  const double xi = 0.7, delta = 0.05;
  const BarrierEval log_side = rbfPenalty(delta, xi, delta);
  const double s = (delta - 2.0 * delta) / delta;
  const double quad_value = xi * (0.5 * s * s - 0.5 - std::log(delta));
  const double quad_d1 = xi * (delta - 2.0 * delta) / (delta * delta);
  const double quad_d2 = xi / (delta * delta);
  EXPECT_NEAR(log_side.value, quad_value, 1e-9);
  EXPECT_NEAR(log_side.value, -xi * std::log(delta), 1e-12);
  EXPECT_NEAR(log_side.d1, quad_d1, 1e-9);
  EXPECT_NEAR(log_side.d1, -xi / delta, 1e-12);
  EXPECT_NEAR(log_side.d2, quad_d2, 1e-9);
}

TEST(Barrier, DerivativesMatchFiniteDifference) {
  const double xi = 0.3, delta = 0.02;
  for (double h = delta / 10.0; h < 10.0 * delta; h *= 1.17) {
    const double eps = 1e-7 * std::max(1.0, std::abs(h));
    const BarrierEval b = rbfPenalty(h, xi, delta);
    const double fd1 = (rbfPenalty(h + eps, xi, delta).value - rbfPenalty(h - eps, xi, delta).value) / (2 * eps);
    const double fd2 = (rbfPenalty(h + eps, xi, delta).d1 - rbfPenalty(h - eps, xi, delta).d1) / (2 * eps);
    EXPECT_NEAR(b.d1, fd1, 1e-5 * std::max(1.0, std::abs(b.d1))) << "h=" << h;
    EXPECT_NEAR(b.d2, fd2, 1e-5 * std::max(1.0, std::abs(b.d2))) << "h=" << h;
  }
}

TEST(Gait, StandAllClosed) {
  const ContactSchedule s = scheduleGait(GaitMode::Stand, 0.0, 0.35, 0.35);
  for (double t = 0.0; t < 2.0; t += 0.01) {
    for (int c = 0; c < kNumContacts; ++c) EXPECT_TRUE(s.closed(c, t));
  }
}

TEST(Gait, WalkAlternatesWithPeriod) {
  const ContactSchedule s = scheduleGait(GaitMode::Walk, 0.0, 0.35, 0.35);
  EXPECT_NEAR(s.period(), 0.7, 1e-12);
  for (double t = 0.0; t < 2.1; t += 0.005) {
    EXPECT_EQ(s.closed(0, t), s.closed(1, t));  // pair toggles together
    EXPECT_EQ(s.closed(2, t), s.closed(3, t));
    EXPECT_TRUE(s.closed(0, t) || s.closed(2, t));  // never in flight
    EXPECT_EQ(s.closed(0, t), s.closed(0, t + 0.7));
  }
  // anti-phase alternation
  EXPECT_TRUE(s.closed(0, 0.1));
  EXPECT_FALSE(s.closed(0, 0.4));
  EXPECT_TRUE(s.closed(2, 0.4));
}

TEST(Gait, WalkStartLeadIn) {
  ContactSchedule s = scheduleGait(GaitMode::Walk, 1.0, 0.4, 0.3);
  s.walk_start = 1.0;
  for (double t = 0.0; t < 1.0; t += 0.01) {
    for (int c = 0; c < kNumContacts; ++c) EXPECT_TRUE(s.closed(c, t));
  }
  double lo, td;
  ASSERT_TRUE(s.swingWindow(0, 1.0, lo, td));
  EXPECT_GE(lo, 1.0);
  EXPECT_NEAR(td - lo, 0.3, 1e-12);
}

TEST(Gait, FlightPhaseRejected) {
  EXPECT_THROW(scheduleGait(GaitMode::Walk, 0.0, 0.2, 0.4), std::invalid_argument);
}

TEST(Flow, FreeFall) {
  const RobotModel m = test::loadBiped24();
  const vector_t x = standingPlannerState(m);
  const vector_t u = vector_t::Zero(plannerInputDim(m));
  const ClosedFlags none{false, false, false, false};
  const vector_t xdot = dynamicsFlow(m, x, u, none);
  EXPECT_NEAR(xdot[0], 0.0, 1e-12);
  EXPECT_NEAR(xdot[1], 0.0, 1e-12);
  EXPECT_NEAR(xdot[2], -m.total_mass * kGravity, 1e-9);
  EXPECT_NEAR(xdot.segment<3>(3).norm(), 0.0, 1e-12);
}

TEST(Flow, StaticStandEquilibrium) {
  const RobotModel m = test::loadBiped24();
  const vector_t x = standingPlannerState(m);
  vector_t u = vector_t::Zero(plannerInputDim(m));
  for (int c = 0; c < kNumContacts; ++c) u[3 * c + 2] = m.total_mass * kGravity / kNumContacts;
  const vector_t xdot = dynamicsFlow(m, x, u, allClosed());
  EXPECT_NEAR(xdot.head<3>().norm(), 0.0, 1e-9);
  // nominal CoM sits over the contact centroid, so the moments cancel
  EXPECT_NEAR(xdot.segment<3>(3).norm(), 0.0, 1e-3);
}

TEST(Flow, MomentumConsistencyOracle) {
  const RobotModel m = test::loadBiped24();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const vector_t q = test::randomConfiguration(m, rng);
    vector_t x(plannerStateDim(m));
    for (int i = 0; i < 6; ++i) x[i] = 10.0 * uni(rng);
    x.segment<6>(6) = q.head<6>();
    x.tail(m.n_j) = q.tail(m.n_j);
    vector_t u(plannerInputDim(m));
    for (int i = 0; i < u.size(); ++i) u[i] = uni(rng);

    const vector_t v = generalizedVelocityFromPlanner(m, x, u);
    const CentroidalQuantities cq = centroidalMomentum(m, q, v);
    EXPECT_LE((cq.h_com - x.head<6>()).norm(), 1e-9) << "trial " << trial;
    EXPECT_LE((v.tail(m.n_j) - u.tail(m.n_j)).norm(), 0.0);
  }
}

TEST(Flow, JacobiansMatchFiniteDifferenceInU) {
  const RobotModel m = test::loadBiped18();
  const vector_t x = standingPlannerState(m);
  vector_t u = vector_t::Zero(plannerInputDim(m));
  for (int c = 0; c < kNumContacts; ++c) u[3 * c + 2] = 100.0;
  matrix_t f_x, f_u;
  flowJacobians(m, x, u, allClosed(), f_x, f_u);
  const double eps = 1e-6;
  for (int i = 0; i < u.size(); ++i) {
    vector_t up = u, um = u;
    up[i] += eps;
    um[i] -= eps;
    const vector_t fd = (dynamicsFlow(m, x, up, allClosed()) - dynamicsFlow(m, x, um, allClosed())) / (2 * eps);
    EXPECT_LE((fd - f_u.col(i)).norm(), 1e-5) << "column " << i;
  }
}

TEST(Inequalities, FrictionAndBounds) {
  const RobotModel m = test::loadBiped24();
  OcpConfig cfg;
  cfg.fz_max = 1.5 * m.total_mass * kGravity;
  const vector_t x = standingPlannerState(m);
  vector_t u = vector_t::Zero(plannerInputDim(m));
  u.segment<3>(0) = vector3_t(0, 0, 100);
  const vector_t h = inequalityValues(m, cfg, x, u, allClosed());
  EXPECT_NEAR(h[0], 0.7 * 100.0, 1e-12);  // friction residual of contact 0

  u.segment<3>(0) = vector3_t(70, 0, 100);
  const vector_t h2 = inequalityValues(m, cfg, x, u, allClosed());
  EXPECT_NEAR(h2[0], 0.0, 1e-12);  // boundary

  // fz rows follow the friction block: [fz, fz_max - fz] per closed contact
  EXPECT_NEAR(h2[4], 100.0, 1e-12);
  EXPECT_NEAR(h2[5], cfg.fz_max - 100.0, 1e-9);
}

TEST(Inequalities, FootPairDistance) {
  const RobotModel m = test::loadBiped24();
  OcpConfig cfg;
  cfg.eps_feet = 0.01;
  vector_t x = vector_t::Zero(plannerStateDim(m));  // zero config: feet 0.22 m apart in y
  const vector_t u = vector_t::Zero(plannerInputDim(m));
  const vector_t h = inequalityValues(m, cfg, x, u, allClosed());
  // last four rows are the cross-foot pairs
  const int n = static_cast<int>(h.size());
  EXPECT_NEAR(h[n - 4], 0.22 * 0.22 - 0.01, 1e-12);             // L_toe vs R_toe
  EXPECT_NEAR(h[n - 3], 0.22 * 0.22 + 0.22 * 0.22 - 0.01, 1e-12);  // L_toe vs R_heel (diagonal)
}

TEST(StageCostTest, ZeroAtReference) {
  const RobotModel m = test::loadBiped24();
  OcpConfig cfg;
  const vector_t x = standingPlannerState(m);
  vector_t u = vector_t::Zero(plannerInputDim(m));
  for (int c = 0; c < kNumContacts; ++c) u[3 * c + 2] = m.total_mass * kGravity / 4;
  const StageCost with_tracking = stageCost(m, cfg, x, u, x, u, allClosed());
  OcpConfig zeroed = cfg;
  zeroed.q_momentum = zeroed.q_base_pose = zeroed.q_joints = zeroed.r_forces = zeroed.r_joint_vel = 0.0;
  const StageCost barrier_only = stageCost(m, zeroed, x, u, x, u, allClosed());
  EXPECT_NEAR(with_tracking.value, barrier_only.value, 1e-12);
}

TEST(StageCostTest, QuadraticScaling) {
  const RobotModel m = test::loadBiped24();
  OcpConfig cfg;
  const vector_t x_ref = standingPlannerState(m);
  vector_t x = x_ref;
  x[6] += 0.05;
  x[12] += 0.1;
  vector_t u = vector_t::Zero(plannerInputDim(m));
  for (int c = 0; c < kNumContacts; ++c) u[3 * c + 2] = m.total_mass * kGravity / 4;

  OcpConfig doubled = cfg;
  doubled.q_momentum *= 2;
  doubled.q_base_pose *= 2;
  doubled.q_joints *= 2;
  OcpConfig zeroq = cfg;
  zeroq.q_momentum = zeroq.q_base_pose = zeroq.q_joints = 0.0;

  const double c1 = stageCost(m, cfg, x, u, x_ref, u, allClosed()).value;
  const double c2 = stageCost(m, doubled, x, u, x_ref, u, allClosed()).value;
  const double c0 = stageCost(m, zeroq, x, u, x_ref, u, allClosed()).value;
  EXPECT_NEAR(c2 - c0, 2.0 * (c1 - c0), 1e-9);
}

TEST(StageCostTest, GradientMatchesFiniteDifference) {
  const RobotModel m = test::loadBiped18();
  OcpConfig cfg;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  vector_t x_ref = standingPlannerState(m);
  vector_t u_ref = vector_t::Zero(plannerInputDim(m));
  for (int c = 0; c < kNumContacts; ++c) u_ref[3 * c + 2] = m.total_mass * kGravity / 4;
  vector_t x = x_ref;
  for (int i = 0; i < x.size(); ++i) x[i] += 0.02 * uni(rng);
  vector_t u = u_ref;
  for (int i = 0; i < u.size(); ++i) u[i] += (i < 12 ? 5.0 : 0.05) * uni(rng);

  const StageCost sc = stageCost(m, cfg, x, u, x_ref, u_ref, allClosed());
  const double eps = 1e-6;
  for (int i = 0; i < x.size(); ++i) {
    vector_t xp = x, xm = x;
    xp[i] += eps;
    xm[i] -= eps;
    const double fd = (stageCost(m, cfg, xp, u, x_ref, u_ref, allClosed()).value -
                       stageCost(m, cfg, xm, u, x_ref, u_ref, allClosed()).value) /
                      (2 * eps);
    EXPECT_NEAR(sc.grad_x[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "x component " << i;
  }
  for (int i = 0; i < u.size(); ++i) {
    vector_t up = u, um = u;
    up[i] += eps;
    um[i] -= eps;
    const double fd = (stageCost(m, cfg, x, up, x_ref, u_ref, allClosed()).value -
                       stageCost(m, cfg, x, um, x_ref, u_ref, allClosed()).value) /
                      (2 * eps);
    EXPECT_NEAR(sc.grad_u[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "u component " << i;
  }
}

TEST(EqualityResidualsTest, StandAtRestIsZero) {
  const RobotModel m = test::loadBiped24();
  const vector_t x = standingPlannerState(m);
  const vector_t u = vector_t::Zero(plannerInputDim(m));
  const vector_t r = equalityResiduals(m, x, u, allClosed(), SwingRefSet{}, 0.0);
  ASSERT_EQ(r.size(), 12);
  EXPECT_NEAR(r.norm(), 0.0, 1e-12);
}

TEST(EqualityResidualsTest, OpenContactForceRow) {
  const RobotModel m = test::loadBiped24();
  const vector_t x = standingPlannerState(m);
  vector_t u = vector_t::Zero(plannerInputDim(m));
  u.segment<3>(6) = vector3_t(1, 2, 3);  // force on an open contact
  ClosedFlags cf = allClosed();
  cf[2] = cf[3] = false;
  const vector_t r = equalityResiduals(m, x, u, cf, SwingRefSet{}, 0.0);
  // rows: closed 0,1 velocities (6), then open 2 force (3), open 3 force (3)
  ASSERT_EQ(r.size(), 12);
  EXPECT_NEAR((r.segment<3>(6) - vector3_t(1, 2, 3)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(r.segment<3>(9).norm(), 0.0, 1e-12);
}

TEST(EqualityResidualsTest, VelocityRowsAffineInJointRates) {
  const RobotModel m = test::loadBiped18();
  std::mt19937_64 rng(31);
  const vector_t q = test::randomConfiguration(m, rng);
  vector_t x(plannerStateDim(m));
  x.head<6>().setZero();
  for (int i = 0; i < 6; ++i) x[i] = 3.0 * (rng() % 100 / 50.0 - 1.0);
  x.segment<6>(6) = q.head<6>();
  x.tail(m.n_j) = q.tail(m.n_j);
  vector_t u = vector_t::Zero(plannerInputDim(m));
  for (int j = 0; j < m.n_j; ++j) u[12 + j] = (rng() % 100) / 50.0 - 1.0;

  const vector_t r0 = equalityResiduals(m, x, u, allClosed(), SwingRefSet{}, 0.0);
  const double eps = 1e-6;
  for (int j = 0; j < m.n_j; ++j) {
    vector_t up = u;
    up[12 + j] += eps;
    const vector_t r1 = equalityResiduals(m, x, up, allClosed(), SwingRefSet{}, 0.0);
    // affine rows: the finite difference is exact up to roundoff
    const vector_t fd = (r1 - r0) / eps;
    for (int row = 0; row < r0.size(); ++row) {
      EXPECT_TRUE(std::isfinite(fd[row]));
    }
  }
}

TEST(Interpolate, NodesAndClamp) {
  Plan plan;
  plan.t0 = 0.0;
  plan.node_dt = 0.1;
  plan.times = {0.0, 0.1, 0.2};
  vector_t a = vector_t::Constant(3, 1.0), b = vector_t::Constant(3, 2.0), c = vector_t::Constant(3, 4.0);
  plan.xs = {a, b, c};
  plan.vs = {a, b, c};
  vector_t ua = vector_t::Zero(14), ub = vector_t::Zero(14);
  ua[2] = 10.0;
  ub[2] = 20.0;
  plan.us = {ua, ub};
  plan.schedule = scheduleGait(GaitMode::Stand, 0.0, 0.35, 0.35);

  const PlanSample s0 = interpolate(plan, 0.1);
  EXPECT_FALSE(s0.clamped);
  EXPECT_NEAR((s0.x - b).norm(), 0.0, 1e-12);

  const PlanSample sm = interpolate(plan, 0.05);
  EXPECT_NEAR(sm.x[0], 1.5, 1e-12);
  EXPECT_NEAR(sm.u[2], 15.0, 1e-12);

  const PlanSample se = interpolate(plan, 0.5);
  EXPECT_TRUE(se.clamped);
  EXPECT_NEAR((se.x - c).norm(), 0.0, 1e-12);
}

TEST(Interpolate, OpenForcesMaskedToZero) {
  Plan plan;
  plan.t0 = 0.0;
  plan.node_dt = 0.1;
  plan.times = {0.0, 0.1};
  vector_t x = vector_t::Zero(3);
  plan.xs = {x, x};
  plan.vs = {x, x};
  vector_t u = vector_t::Zero(14);
  u[0] = 5.0;  // contact 0 fx
  u[6] = 7.0;  // contact 2 fx
  plan.us = {u};
  plan.schedule = scheduleGait(GaitMode::Walk, 0.0, 0.35, 0.35);
  // at t = 0.4 the left pair (contacts 0,1) is open
  plan.times = {0.35, 0.45};
  plan.t0 = 0.35;
  const PlanSample s = interpolate(plan, 0.4);
  EXPECT_EQ(s.u[0], 0.0);
  EXPECT_EQ(s.u[6], 7.0);
}

TEST(Interpolate, EmptyPlanRejected) {
  Plan plan;
  EXPECT_THROW(interpolate(plan, 0.0), std::invalid_argument);
}
