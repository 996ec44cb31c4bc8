#include "kdwbc/wbc.hpp"

#include <set>

#include "kdwbc/geometry.hpp"

namespace kdwbc {

namespace {

matrix_t stackedContactJacobian(const WbcContext& ctx) {
  const int nv = ctx.model->nv();
  matrix_t J(3 * kNumContacts, nv);
  for (int c = 0; c < kNumContacts; ++c) J.middleRows<3>(3 * c) = ctx.Jc[static_cast<size_t>(c)];
  return J;
}

}  // namespace

void WbcGains::validate() const {
  if (kp_swing < 0 || kd_swing < 0 || kp_joint < 0 || kd_joint < 0) {
    throw std::invalid_argument("WbcGains: scalar gains must be nonnegative");
  }
  if ((kp_base.array() <= 0).any() || (kd_base.array() <= 0).any()) {
    throw std::invalid_argument("WbcGains: base gain matrices must be positive definite");
  }
}

WbcContext makeWbcContext(const RobotModel& model, double t, const GeneralizedState& measured, const Plan& plan) {
  measured.validate(model);
  WbcContext ctx;
  ctx.model = &model;
  ctx.t = t;
  ctx.measured = measured;
  const PlanSample sample = interpolate(plan, t);
  ctx.x_plan = sample.x;
  ctx.u_plan = sample.u;
  ctx.v_plan = sample.v;
  ctx.swing = &plan.swing;
  ctx.closed = plan.closedAt(t);

  ctx.M = massMatrix(model, measured.q);
  ctx.nle = nonlinearEffects(model, measured.q, measured.v);
  ctx.fk = forwardKinematics(model, measured.q);
  ctx.lv = linkVelocities(model, ctx.fk, measured.v);
  for (int c = 0; c < kNumContacts; ++c) {
    ctx.Jc[static_cast<size_t>(c)] = contactJacobian(model, ctx.fk, c);
    ctx.jdv[static_cast<size_t>(c)] = contactJdotV(model, ctx.fk, ctx.lv, measured.v, c);
  }
  return ctx;
}

Task taskPhysicalConsistency(const WbcContext& ctx) {
  const int nv = ctx.model->nv();
  const int nx = wbcVariableDim(*ctx.model);
  Task t;
  t.priority = 1;
  t.label = "physical consistency";
  t.A = matrix_t::Zero(6, nx);
  t.A.leftCols(nv) = ctx.M.topRows<6>();
  t.A.rightCols(3 * kNumContacts) = -stackedContactJacobian(ctx).leftCols<6>().transpose();
  t.b = -ctx.nle.head<6>();
  return t;
}

Task taskContactMotion(const WbcContext& ctx) {
  const int nv = ctx.model->nv();
  const int nx = wbcVariableDim(*ctx.model);
  int n_closed = 0;
  for (bool b : ctx.closed) n_closed += b ? 1 : 0;
  Task t;
  t.priority = 1;
  t.label = "contact motion consistency";
  t.A = matrix_t::Zero(3 * n_closed, nx);
  t.b = vector_t::Zero(3 * n_closed);
  int row = 0;
  std::array<int, kNumContacts> row_of{-1, -1, -1, -1};
  for (int c = 0; c < kNumContacts; ++c) {
    if (!ctx.closed[static_cast<size_t>(c)]) continue;
    t.A.block(row, 0, 3, nv) = ctx.Jc[static_cast<size_t>(c)];
    t.b.segment<3>(row) = -ctx.jdv[static_cast<size_t>(c)];
    row_of[static_cast<size_t>(c)] = row;
    row += 3;
  }
  // Toe and heel of one rigid foot leave the 6 rows rank-deficient along the
  // toe-heel line; the centripetal part of the bias in that direction is
  // unachievable (the rigid distance cannot stretch), so project it out of
  // the target to keep the hard system consistent.
  for (int foot = 0; foot < 2; ++foot) {
    const int toe = 2 * foot, heel = 2 * foot + 1;
    if (row_of[static_cast<size_t>(toe)] < 0 || row_of[static_cast<size_t>(heel)] < 0) continue;
    vector3_t r = ctx.fk.contact_positions[static_cast<size_t>(heel)] -
                  ctx.fk.contact_positions[static_cast<size_t>(toe)];
    if (r.norm() < 1e-9) continue;
    r.normalize();
    const int rt = row_of[static_cast<size_t>(toe)];
    const int rh = row_of[static_cast<size_t>(heel)];
    const double inconsistent = (r.dot(t.b.segment<3>(rh)) - r.dot(t.b.segment<3>(rt))) / 2.0;
    t.b.segment<3>(rt) += inconsistent * r;
    t.b.segment<3>(rh) -= inconsistent * r;
  }
  return t;
}

Task taskTorqueLimits(const WbcContext& ctx) {
  const RobotModel& m = *ctx.model;
  const int nv = m.nv();
  const int nx = wbcVariableDim(m);
  const matrix_t Mj = ctx.M.bottomRows(m.n_j);
  const matrix_t JjT = stackedContactJacobian(ctx).rightCols(m.n_j).transpose();
  const vector_t nj = ctx.nle.tail(m.n_j);

  Task t;
  t.priority = 1;
  t.label = "torque limits";
  t.D = matrix_t::Zero(2 * m.n_j, nx);
  t.f = vector_t::Zero(2 * m.n_j);
  t.D.topLeftCorner(m.n_j, nv) = Mj;
  t.D.topRightCorner(m.n_j, 3 * kNumContacts) = -JjT;
  t.f.head(m.n_j) = m.limits.tau_max - nj;
  t.D.bottomLeftCorner(m.n_j, nv) = -Mj;
  t.D.bottomRightCorner(m.n_j, 3 * kNumContacts) = JjT;
  t.f.tail(m.n_j) = nj - m.limits.tau_min;
  return t;
}

Task taskFriction(const WbcContext& ctx, double mu) {
  const RobotModel& m = *ctx.model;
  const int nv = m.nv();
  const int nx = wbcVariableDim(m);
  int n_closed = 0;
  for (bool b : ctx.closed) n_closed += b ? 1 : 0;
  const int n_open = kNumContacts - n_closed;

  Task t;
  t.priority = 1;
  t.label = "friction constraints";
  t.D = matrix_t::Zero(5 * n_closed, nx);
  t.f = vector_t::Zero(5 * n_closed);
  t.A = matrix_t::Zero(3 * n_open, nx);
  t.b = vector_t::Zero(3 * n_open);
  matrix_t C_lc(5, 3);
  C_lc << 0, 0, -1,  //
      1, 0, -mu,     //
      -1, 0, -mu,    //
      0, 1, -mu,     //
      0, -1, -mu;
  int drow = 0, arow = 0;
  for (int c = 0; c < kNumContacts; ++c) {
    if (ctx.closed[static_cast<size_t>(c)]) {
      t.D.block<5, 3>(drow, nv + 3 * c) = C_lc;
      drow += 5;
    } else {
      t.A.block<3, 3>(arow, nv + 3 * c).setIdentity();
      arow += 3;
    }
  }
  return t;
}

Task taskSwingTracking(const WbcContext& ctx, const WbcGains& gains) {
  const RobotModel& m = *ctx.model;
  const int nv = m.nv();
  const int nx = wbcVariableDim(m);
  std::vector<int> swing_contacts;
  for (int c = 0; c < kNumContacts; ++c) {
    if (!ctx.closed[static_cast<size_t>(c)] && ctx.swing != nullptr &&
        ctx.swing->activeRef(footOfContact(c), ctx.t) != nullptr) {
      swing_contacts.push_back(c);
    }
  }
  Task t;
  t.priority = 2;
  t.label = "swing tracking";
  t.A = matrix_t::Zero(3 * static_cast<int>(swing_contacts.size()), nx);
  t.b = vector_t::Zero(t.A.rows());
  int row = 0;
  for (int c : swing_contacts) {
    const SwingReference* ref = ctx.swing->activeRef(footOfContact(c), ctx.t);
    const vector3_t p = ctx.fk.contact_positions[static_cast<size_t>(c)];
    const vector3_t pdot = ctx.Jc[static_cast<size_t>(c)] * ctx.measured.v;
    t.A.block(row, 0, 3, nv) = ctx.Jc[static_cast<size_t>(c)];
    // stabilizing sign: gains act on (reference - measured)
    t.b.segment<3>(row) = gains.kp_swing * (ref->pointPosition(c, ctx.t) - p) +
                          gains.kd_swing * (ref->pointVelocity(c, ctx.t) - pdot) -
                          ctx.jdv[static_cast<size_t>(c)];
    row += 3;
  }
  return t;
}

std::vector<int> upperLimbJoints(const RobotModel& m) {
  std::set<int> leg;
  for (int c = 0; c < kNumContacts; ++c) {
    for (int j : m.supportingJoints(m.contact(c).link)) leg.insert(j);
  }
  std::vector<int> arms;
  for (int j = 0; j < m.n_j; ++j) {
    if (!leg.count(j)) arms.push_back(j);
  }
  return arms;
}

Task taskJointTracking(const WbcContext& ctx, const WbcGains& gains) {
  const RobotModel& m = *ctx.model;
  const int nx = wbcVariableDim(m);
  const std::vector<int> arms = upperLimbJoints(m);
  Task t;
  t.priority = 2;
  t.label = "upper-limb joint tracking";
  t.A = matrix_t::Zero(static_cast<int>(arms.size()), nx);
  t.b = vector_t::Zero(t.A.rows());
  for (size_t i = 0; i < arms.size(); ++i) {
    const int j = arms[i];
    t.A(static_cast<int>(i), 6 + j) = 1.0;
    const double q_err = ctx.x_plan[12 + j] - ctx.measured.q[6 + j];
    const double v_err = ctx.v_plan[6 + j] - ctx.measured.v[6 + j];
    t.b[static_cast<int>(i)] = gains.kp_joint * q_err + gains.kd_joint * v_err;
  }
  return t;
}

Task taskBaseTracking(const WbcContext& ctx, const WbcGains& gains) {
  const RobotModel& m = *ctx.model;
  const int nx = wbcVariableDim(m);
  Task t;
  t.priority = 3;
  t.label = "base tracking";
  t.A = matrix_t::Zero(6, nx);
  t.A.leftCols<6>().setIdentity();
  const vector6_t pose_err = poseBoxMinus(ctx.x_plan.segment<6>(6), ctx.measured.q.head<6>());
  const vector6_t vel_err = ctx.v_plan.head<6>() - ctx.measured.v.head<6>();
  t.b = gains.kp_base.cwiseProduct(pose_err) + gains.kd_base.cwiseProduct(vel_err);
  return t;
}

Task taskForceTracking(const WbcContext& ctx) {
  const RobotModel& m = *ctx.model;
  const int nv = m.nv();
  const int nx = wbcVariableDim(m);
  Task t;
  t.priority = 4;
  t.label = "contact force tracking";
  t.A = matrix_t::Zero(3 * kNumContacts, nx);
  t.A.rightCols(3 * kNumContacts).setIdentity();
  t.b = ctx.u_plan.head(3 * kNumContacts);
  (void)nv;
  return t;
}

std::vector<Task> buildTaskSet(const WbcContext& ctx, const WbcGains& gains, double mu) {
  std::vector<Task> tasks;
  tasks.push_back(taskPhysicalConsistency(ctx));
  tasks.push_back(taskContactMotion(ctx));
  tasks.push_back(taskTorqueLimits(ctx));
  tasks.push_back(taskFriction(ctx, mu));
  tasks.push_back(taskSwingTracking(ctx, gains));
  tasks.push_back(taskJointTracking(ctx, gains));
  tasks.push_back(taskBaseTracking(ctx, gains));
  tasks.push_back(taskForceTracking(ctx));
  return tasks;
}

namespace {

struct LevelBlocks {
  matrix_t A, D;
  vector_t b, f;
  std::vector<std::string> labels;
};

std::array<LevelBlocks, 4> stackByPriority(const std::vector<Task>& tasks, int n) {
  std::array<LevelBlocks, 4> levels;
  for (LevelBlocks& l : levels) {
    l.A = matrix_t::Zero(0, n);
    l.b = vector_t::Zero(0);
    l.D = matrix_t::Zero(0, n);
    l.f = vector_t::Zero(0);
  }
  for (const Task& t : tasks) {
    if (t.priority < 1 || t.priority > 4) throw WbcError("task '" + t.label + "': priority outside 1..4");
    LevelBlocks& l = levels[static_cast<size_t>(t.priority - 1)];
    if (t.A.rows() > 0) {
      matrix_t A(l.A.rows() + t.A.rows(), n);
      A << l.A, t.A;
      l.A = std::move(A);
      vector_t b(l.b.size() + t.b.size());
      b << l.b, t.b;
      l.b = std::move(b);
    }
    if (t.D.rows() > 0) {
      matrix_t D(l.D.rows() + t.D.rows(), n);
      D << l.D, t.D;
      l.D = std::move(D);
      vector_t f(l.f.size() + t.f.size());
      f << l.f, t.f;
      l.f = std::move(f);
    }
    l.labels.push_back(t.label);
  }
  return levels;
}

}  // namespace

WbcSolution WbcSolver::solveHierarchical(const std::vector<Task>& tasks) {
  if (tasks.empty()) throw WbcError("solveHierarchical: no tasks");
  const int n = static_cast<int>(tasks.front().A.cols() > 0 ? tasks.front().A.cols() : tasks.front().D.cols());
  const std::array<LevelBlocks, 4> levels = stackByPriority(tasks, n);

  WbcSolution sol;
  vector_t xi = vector_t::Zero(n);
  matrix_t Z = matrix_t::Identity(n, n);
  matrix_t D_carry = matrix_t::Zero(0, n);
  vector_t f_carry = vector_t::Zero(0);

  for (int p = 0; p < 4; ++p) {
    const LevelBlocks& l = levels[static_cast<size_t>(p)];
    if (l.A.rows() == 0 && l.D.rows() == 0) continue;
    if (Z.cols() == 0) {
      sol.rank_collapsed = true;
      break;
    }
    const int nz = static_cast<int>(Z.cols());
    const int ms = p == 0 ? 0 : static_cast<int>(l.D.rows());  // level-1 inequalities are hard

    QpProblem qp;
    qp.H = matrix_t::Zero(nz + ms, nz + ms);
    qp.g = vector_t::Zero(nz + ms);
    const matrix_t AZ = l.A * Z;
    if (p == 0) {
      // level 1 is hard: equalities as constraints, minimum-norm objective
      qp.H.topLeftCorner(nz, nz) = kRegularization * matrix_t::Identity(nz, nz);
      qp.A_eq = matrix_t::Zero(l.A.rows(), nz + ms);
      qp.A_eq.leftCols(nz) = AZ;
      qp.b_eq = l.b - l.A * xi;
    } else {
      qp.H.topLeftCorner(nz, nz) = AZ.transpose() * AZ + kRegularization * matrix_t::Identity(nz, nz);
      qp.g.head(nz) = AZ.transpose() * (l.A * xi - l.b);
      qp.A_eq = matrix_t::Zero(0, nz + ms);
      qp.b_eq = vector_t::Zero(0);
    }
    if (ms > 0) qp.H.bottomRightCorner(ms, ms).setIdentity();

    const int carried = static_cast<int>(D_carry.rows());
    const int own_hard = p == 0 ? static_cast<int>(l.D.rows()) : 0;
    qp.D_in = matrix_t::Zero(carried + own_hard + ms, nz + ms);
    qp.f_in = vector_t::Zero(qp.D_in.rows());
    if (carried > 0) {
      qp.D_in.topLeftCorner(carried, nz) = D_carry * Z;
      qp.f_in.head(carried) = f_carry - D_carry * xi;
    }
    if (own_hard > 0) {
      qp.D_in.block(carried, 0, own_hard, nz) = l.D * Z;
      qp.f_in.segment(carried, own_hard) = l.f - l.D * xi;
    }
    if (ms > 0) {
      qp.D_in.block(carried + own_hard, 0, ms, nz) = l.D * Z;
      qp.D_in.block(carried + own_hard, nz, ms, ms) = -matrix_t::Identity(ms, ms);
      qp.f_in.tail(ms) = l.f - l.D * xi;
    }

    const QpSolution qs = level_solvers_[static_cast<size_t>(p)].solve(qp);
    if (qs.status == QpStatus::Infeasible) {
      if (p == 0) {
        throw WbcError("priority-1 tasks infeasible (" + l.labels.front() + " level)");
      }
      sol.rank_collapsed = true;
      break;
    }

    xi += Z * qs.x.head(nz);

    if (p == 0 && l.A.rows() > 0 && (l.A * xi - l.b).cwiseAbs().maxCoeff() > 1e-7) {
      // hard level: equalities must actually hold; name the worst offender
      std::string label = "priority-1";
      double worst = 0.0;
      for (const Task& t : tasks) {
        if (t.priority != 1 || t.A.rows() == 0) continue;
        const double r = (t.A * xi - t.b).cwiseAbs().maxCoeff();
        if (r > worst) {
          worst = r;
          label = t.label;
        }
      }
      throw WbcError("priority-1 task infeasible: " + label + " (residual " + std::to_string(worst) + ")");
    }

    // carry this level's inequalities with frozen slacks
    if (l.D.rows() > 0) {
      vector_t f_eff = l.f;
      if (ms > 0) {
        const vector_t s = qs.x.tail(ms).cwiseMax(0.0);
        f_eff += s;
      }
      matrix_t D_new(D_carry.rows() + l.D.rows(), n);
      D_new << D_carry, l.D;
      D_carry = std::move(D_new);
      vector_t f_new(f_carry.size() + f_eff.size());
      f_new << f_carry, f_eff;
      f_carry = std::move(f_new);
    }
    if (l.A.rows() > 0) {
      Z = Z * nullspaceBasis(l.A * Z);
    }
  }

  sol.xi = xi;
  for (int p = 0; p < 4; ++p) {
    const LevelBlocks& l = levels[static_cast<size_t>(p)];
    sol.level_residuals[static_cast<size_t>(p)] = l.A.rows() > 0 ? (l.A * xi - l.b).norm() : 0.0;
  }
  return sol;
}

WbcSolution WbcSolver::solveFlat(const std::vector<Task>& tasks, const FlatWeights& weights) {
  if (tasks.empty()) throw WbcError("solveFlat: no tasks");
  const int n = static_cast<int>(tasks.front().A.cols() > 0 ? tasks.front().A.cols() : tasks.front().D.cols());
  const std::array<LevelBlocks, 4> levels = stackByPriority(tasks, n);

  QpProblem qp;
  qp.H = kRegularization * matrix_t::Identity(n, n);
  qp.g = vector_t::Zero(n);
  const double w[4] = {0.0, weights.limb, weights.base, weights.force};
  for (int p = 1; p < 4; ++p) {
    const LevelBlocks& l = levels[static_cast<size_t>(p)];
    if (l.A.rows() == 0) continue;
    qp.H += 2.0 * w[p] * l.A.transpose() * l.A;
    qp.g += 2.0 * w[p] * l.A.transpose() * (-l.b);
  }
  qp.A_eq = levels[0].A;
  qp.b_eq = levels[0].b;
  qp.D_in = levels[0].D;
  qp.f_in = levels[0].f;

  const QpSolution qs = level_solvers_[4].solve(qp);
  if (qs.status == QpStatus::Infeasible) {
    throw WbcError("flat QP: hard constraints infeasible");
  }

  WbcSolution sol;
  sol.xi = qs.x;
  for (int p = 0; p < 4; ++p) {
    const LevelBlocks& l = levels[static_cast<size_t>(p)];
    sol.level_residuals[static_cast<size_t>(p)] = l.A.rows() > 0 ? (l.A * sol.xi - l.b).norm() : 0.0;
  }
  return sol;
}

vector_t computeTorques(const WbcContext& ctx, const vector_t& xi) {
  const RobotModel& m = *ctx.model;
  const int nv = m.nv();
  const matrix_t Mj = ctx.M.bottomRows(m.n_j);
  const matrix_t JjT = stackedContactJacobian(ctx).rightCols(m.n_j).transpose();
  return Mj * xi.head(nv) - JjT * xi.tail(3 * kNumContacts) + ctx.nle.tail(m.n_j);
}

}  // namespace kdwbc
