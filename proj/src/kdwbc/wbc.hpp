#pragma once

#include <string>
#include <vector>

#include "kdwbc/dynamics.hpp"
#include "kdwbc/planner.hpp"
#include "kdwbc/qp.hpp"

namespace kdwbc {

class WbcError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One prioritized block on xi = [vdot (6+n_j); F_c (12)].
struct Task {
  int priority = 1;
  matrix_t A;  // equality: A xi = b
  vector_t b;
  matrix_t D;  // inequality: D xi <= f
  vector_t f;
  std::string label;
};

struct WbcGains {
  double kp_swing = 100.0, kd_swing = 20.0;
  double kp_joint = 100.0, kd_joint = 10.0;
  vector6_t kp_base = (vector6_t() << 100, 100, 100, 200, 200, 200).finished();
  vector6_t kd_base = (vector6_t() << 20, 20, 20, 40, 40, 40).finished();

  void validate() const;
};

inline int wbcVariableDim(const RobotModel& m) { return m.nv() + 3 * kNumContacts; }

// Everything a control tick needs, computed once from the measured state and
// the interpolated plan sample.
struct WbcContext {
  const RobotModel* model = nullptr;
  double t = 0.0;
  GeneralizedState measured;
  vector_t x_plan, u_plan, v_plan;
  const SwingRefSet* swing = nullptr;
  ClosedFlags closed{};

  matrix_t M;
  vector_t nle;
  ForwardKinematics fk;
  LinkVelocities lv;
  std::array<matrix_t, kNumContacts> Jc;
  std::array<vector3_t, kNumContacts> jdv;
};

WbcContext makeWbcContext(const RobotModel& model, double t, const GeneralizedState& measured, const Plan& plan);

// Table-1 task builders. Priority 1: physical consistency, contact motion,
// torque limits, friction (with open-contact zero-force rows). Priority 2:
// swing-foot and upper-limb tracking. Priority 3: base tracking. Priority 4:
// contact force tracking.
Task taskPhysicalConsistency(const WbcContext& ctx);
Task taskContactMotion(const WbcContext& ctx);
Task taskTorqueLimits(const WbcContext& ctx);
Task taskFriction(const WbcContext& ctx, double mu);
Task taskSwingTracking(const WbcContext& ctx, const WbcGains& gains);
Task taskJointTracking(const WbcContext& ctx, const WbcGains& gains);
Task taskBaseTracking(const WbcContext& ctx, const WbcGains& gains);
Task taskForceTracking(const WbcContext& ctx);

std::vector<Task> buildTaskSet(const WbcContext& ctx, const WbcGains& gains, double mu);

// Joints that belong to no contact chain (the upper limbs).
std::vector<int> upperLimbJoints(const RobotModel& m);

struct WbcSolution {
  vector_t xi;
  std::array<double, 4> level_residuals{};  // ||A_p xi - b_p|| per priority
  bool rank_collapsed = false;
};

struct FlatWeights {
  double limb = 10.0, base = 1.0, force = 0.01;
};

// Hierarchical cascade: lexicographic least squares with accumulated
// equality nullspaces and frozen inequality slacks. Throws WbcError naming
// the violated task when priority 1 is infeasible.
class WbcSolver {
 public:
  static constexpr double kRegularization = 1e-8;

  WbcSolution solveHierarchical(const std::vector<Task>& tasks);
  // cNH ablation: priority-1 rows hard, levels 2-4 in one weighted objective
  WbcSolution solveFlat(const std::vector<Task>& tasks, const FlatWeights& weights = {});

 private:
  std::array<QpSolver, 5> level_solvers_;  // warm-start state per level (index 4: flat)
};

// tau = [M_j  -J_j'] xi + n_j
vector_t computeTorques(const WbcContext& ctx, const vector_t& xi);

}  // namespace kdwbc
