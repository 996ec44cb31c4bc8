#pragma once

#include <array>
#include <optional>
#include <vector>

#include "kdwbc/dynamics.hpp"
#include "kdwbc/gait.hpp"
#include "kdwbc/swing.hpp"
#include "kdwbc/terrain.hpp"

namespace kdwbc {

class FlowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OcpConfig {
  double horizon = 1.0;
  int nodes = 20;
  double q_momentum = 1.0;
  double q_base_pose = 100.0;
  double q_joints = 10.0;
  double r_forces = 1e-3;
  double r_joint_vel = 1.0;
  double xi_rbf = 0.1;
  double delta_rbf = 0.01;
  double mu_s = 0.7;
  double fz_max = 0.0;  // <= 0: set to 1.5 * m * g when the planner binds a model
  double eps_feet = 0.01;  // squared-distance threshold, m^2
  double nominal_height = 0.90;
  double capture_gain = 0.15;
  double position_feedback_gain = 0.5;   // synthesizes the footstep velocity input
  double position_feedback_clamp = 0.3;  // m/s
  double apex_height = 0.08;
  int max_sqp_iterations = 5;
  double constraint_penalty = 1e6;  // swing-position rows inside the QP

  double nodeDt() const { return horizon / nodes; }
  void validate() const;
};

// Planner state x = [h_com; q_b; q_j], input u = [f_c1..f_c4; v_j].
inline int plannerStateDim(const RobotModel& m) { return 12 + m.n_j; }
inline int plannerInputDim(const RobotModel& m) { return 3 * kNumContacts + m.n_j; }

vector_t coordinatesFromPlannerState(const RobotModel& m, const vector_t& x);

// v = [A_b^{-1}(h - A_j v_j); v_j], the generalized velocity consistent with
// the planner state/input pair.
vector_t generalizedVelocityFromPlanner(const RobotModel& m, const vector_t& x, const vector_t& u);

// Planner state of a measured generalized state.
vector_t plannerStateOfMeasurement(const RobotModel& m, const GeneralizedState& gs);

using ClosedFlags = std::array<bool, kNumContacts>;

// Kinematic/centroidal quantities shared by the flow, cost, and constraint
// evaluations at one (x, u) point. Throws FlowError when the momentum base
// block is singular.
struct NodeEval {
  vector_t q;
  ForwardKinematics fk;
  CentroidalQuantities cq;
  Eigen::PartialPivLU<matrix6_t> ab_lu;
  vector6_t v_b;
  vector_t v;
};
NodeEval makeNodeEval(const RobotModel& m, const vector_t& x, const vector_t& u);

// Centroidal-plus-kinematics flow. Throws FlowError when the momentum base
// block is singular (treated as a line-search rejection by the solver).
vector_t dynamicsFlow(const RobotModel& m, const vector_t& x, const vector_t& u, const ClosedFlags& closed);
vector_t dynamicsFlow(const RobotModel& m, const NodeEval& ev, const vector_t& x, const vector_t& u,
                      const ClosedFlags& closed);

// Analytic flow Jacobians used by the Gauss-Newton step. The dependence of
// the momentum matrix on the configuration is not differentiated; the merit
// line search and the per-node projection keep the iterates honest.
void flowJacobians(const RobotModel& m, const vector_t& x, const vector_t& u, const ClosedFlags& closed,
                   matrix_t& f_x, matrix_t& f_u);
void flowJacobians(const RobotModel& m, const NodeEval& ev, const vector_t& x, const vector_t& u,
                   const ClosedFlags& closed, matrix_t& f_x, matrix_t& f_u);

// All inequality values h_i(x, u) >= 0, ordered: per closed contact
// [friction cone; f_z; f_z_max - f_z], joint position margins (lower then
// upper), joint velocity margins (lower then upper), four cross-foot
// squared-distance margins.
vector_t inequalityValues(const RobotModel& m, const OcpConfig& cfg, const vector_t& x, const vector_t& u,
                          const ClosedFlags& closed);

struct StageCost {
  double value = 0.0;
  vector_t grad_x, grad_u;
  matrix_t hess_xx, hess_uu;  // Gauss-Newton, positive semidefinite
};

StageCost stageCost(const RobotModel& m, const OcpConfig& cfg, const vector_t& x, const vector_t& u,
                    const vector_t& x_ref, const vector_t& u_ref, const ClosedFlags& closed);
StageCost stageCost(const RobotModel& m, const OcpConfig& cfg, const NodeEval& ev, const vector_t& x,
                    const vector_t& u, const vector_t& x_ref, const vector_t& u_ref, const ClosedFlags& closed);

// Swing references active along the horizon, per foot, ordered by liftoff.
struct SwingRefSet {
  std::array<std::vector<SwingReference>, 2> per_foot;

  const SwingReference* activeRef(int foot, double t) const;
};

// Mode equality residuals at one node, ordered: per closed contact the
// contact velocity (3), per open contact the force (3), the position error
// from its swing reference (3), and the velocity error (3). Open-contact rows
// without a covering swing reference are skipped. The terminal node of a plan
// carries no input; include_input_rows = false restricts to the
// position-level rows there.
vector_t equalityResiduals(const RobotModel& m, const vector_t& x, const vector_t& u, const ClosedFlags& closed,
                           const SwingRefSet& swing, double t, bool include_input_rows = true);
vector_t equalityResiduals(const RobotModel& m, const NodeEval& ev, const vector_t& x, const vector_t& u,
                           const ClosedFlags& closed, const SwingRefSet& swing, double t,
                           bool include_input_rows = true);

}  // namespace kdwbc
