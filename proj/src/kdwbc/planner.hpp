#pragma once

#include <functional>
#include <optional>

#include "kdwbc/footstep.hpp"
#include "kdwbc/ocp.hpp"

namespace kdwbc {

struct CommandSample {
  double vx = 0.0, vy = 0.0;   // desired base velocity, world frame, m/s
  double yaw_rate = 0.0;       // rad/s
  double height = 0.9;         // desired base height over terrain, m
};
using CommandFn = std::function<CommandSample(double)>;

struct GaitSettings {
  GaitMode mode = GaitMode::Stand;
  double stance_time = 0.35;
  double swing_time = 0.35;
  double walk_start_time = 0.0;  // stand until here when mode == Walk
};

struct PlanSample {
  vector_t x, u, v;
  bool clamped = false;
};

struct Plan {
  double t0 = 0.0;
  double node_dt = 0.05;
  std::vector<double> times;     // N+1
  std::vector<vector_t> xs, vs;  // N+1
  std::vector<vector_t> us;      // N
  std::vector<vector_t> x_refs;  // N+1, tracking references (logged, not control)
  ContactSchedule schedule;
  SwingRefSet swing;

  int sqp_iterations = 0;
  std::vector<double> merit_sequence;  // merit of the accepted iterates
  double solve_ms = 0.0;
  bool hit_iteration_cap = false;
  bool line_search_failed = false;
  bool flow_singular = false;

  bool empty() const { return xs.empty(); }
  double tEnd() const { return times.empty() ? t0 : times.back(); }
  ClosedFlags closedAt(double t) const;
};

// Linear interpolation between nodes; forces of contacts open at t are exactly
// zero; t outside the horizon clamps to the boundary nodes (flagged).
PlanSample interpolate(const Plan& plan, double t);

class KinoDynamicsPlanner {
 public:
  KinoDynamicsPlanner(const RobotModel& model, OcpConfig config, Terrain terrain, GaitSettings gait);

  // Initializes the reference pose integrator from the measured state.
  void reset(double t0, const GeneralizedState& measured);

  Plan solve(double t_now, const GeneralizedState& measured, const CommandFn& cmd, const Plan* warm_start);

  const OcpConfig& config() const { return config_; }
  ContactSchedule schedule() const;

  // integrated reference pose (x, y, yaw) and commanded height at time t >=
  // the last solve time; used for logging and metrics
  Eigen::Vector4d referencePose(double t, const CommandFn& cmd) const;

 private:
  struct Iterate {
    std::vector<vector_t> xs, us;
  };

  vector_t referenceState(double t, const CommandFn& cmd) const;
  vector_t referenceInput(double t, const ContactSchedule& schedule) const;
  void updateSwingReferences(double t_now, const GeneralizedState& measured, const CommandFn& cmd,
                             const ContactSchedule& schedule);
  void projectIterate(Iterate& it, const std::vector<double>& times, const std::vector<ClosedFlags>& closed) const;
  double merit(const Iterate& it, const std::vector<double>& times, const std::vector<ClosedFlags>& closed,
               const std::vector<vector_t>& x_refs, const std::vector<vector_t>& u_refs) const;
  bool feasible(const Iterate& it, const std::vector<ClosedFlags>& closed) const;

  const RobotModel& model_;
  OcpConfig config_;
  Terrain terrain_;
  GaitSettings gait_;

  // reference pose integrator
  double ref_time_ = 0.0;
  double ref_x_ = 0.0, ref_y_ = 0.0, ref_yaw_ = 0.0;

  // frozen swing references of ongoing swings, keyed by liftoff time
  std::array<std::optional<SwingReference>, 2> active_swing_;
  SwingRefSet swing_;
};

}  // namespace kdwbc
