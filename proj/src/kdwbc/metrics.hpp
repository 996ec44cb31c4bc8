#pragma once

#include <string>
#include <vector>

#include "kdwbc/types.hpp"

namespace kdwbc {

// Per-WBC-tick log row. Wall-clock solve times are kept for reporting but are
// excluded from the CSV export so identical runs produce identical bytes.
struct LogRecord {
  double t = 0.0;
  vector_t q, v;            // measured state
  vector_t x_plan, u_plan;  // interpolated plan sample
  vector_t xi;              // WBC solution
  vector_t tau;             // actuator commands
  vector_t contact_forces;  // simulator ground truth, 12
  std::array<double, 4> hqp_residuals{};
  int planner_tick = 0;
  double plan_cost = 0.0;
  int plan_iterations = 0;
  double swing_foot_err = 0.0;  // mean position error of active swing points, m
  Eigen::Vector4d cmd = Eigen::Vector4d::Zero();       // vx vy yaw_rate height
  Eigen::Vector4d ref_pose = Eigen::Vector4d::Zero();  // x y yaw z reference
  double plan_solve_ms = 0.0;  // not exported
  double wbc_solve_ms = 0.0;   // not exported
};

struct Metrics {
  double vel_rms = 0.0;         // m/s, xy velocity tracking
  double height_rms = 0.0;      // m
  double roll_rms = 0.0, pitch_rms = 0.0, yaw_rms = 0.0;  // rad
  double limb_joint_rms = 0.0;  // rad, plan vs measured over actuated joints
  double swing_foot_rms = 0.0;  // m
  bool fall = false;
  double mean_planner_ms = 0.0, max_planner_ms = 0.0;
  double mean_wbc_ms = 0.0, max_wbc_ms = 0.0;
  double window_start = 1.0;  // metrics ignore the warmup
};

Metrics computeMetrics(const std::vector<LogRecord>& log, int n_j, bool fall_flag);

std::string metricsText(const Metrics& m);

}  // namespace kdwbc
