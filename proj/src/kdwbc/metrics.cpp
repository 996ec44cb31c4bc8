#include "kdwbc/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kdwbc {

Metrics computeMetrics(const std::vector<LogRecord>& log, int n_j, bool fall_flag) {
  if (log.empty()) throw std::invalid_argument("computeMetrics: empty log");
  Metrics m;
  m.fall = fall_flag;

  double vel2 = 0, height2 = 0, roll2 = 0, pitch2 = 0, yaw2 = 0, joint2 = 0, swing2 = 0;
  long count = 0, joint_count = 0;
  for (const LogRecord& r : log) {
    if (r.t < m.window_start) continue;
    ++count;
    const double evx = r.v[0] - r.cmd[0];
    const double evy = r.v[1] - r.cmd[1];
    vel2 += evx * evx + evy * evy;
    const double eh = r.q[2] - r.ref_pose[3];
    height2 += eh * eh;
    const double eyaw = r.q[3] - r.ref_pose[2];
    yaw2 += eyaw * eyaw;
    pitch2 += r.q[4] * r.q[4];
    roll2 += r.q[5] * r.q[5];
    for (int j = 0; j < n_j; ++j) {
      const double e = r.x_plan[12 + j] - r.q[6 + j];
      joint2 += e * e;
      ++joint_count;
    }
    swing2 += r.swing_foot_err * r.swing_foot_err;
  }
  if (count > 0) {
    m.vel_rms = std::sqrt(vel2 / count);
    m.height_rms = std::sqrt(height2 / count);
    m.roll_rms = std::sqrt(roll2 / count);
    m.pitch_rms = std::sqrt(pitch2 / count);
    m.yaw_rms = std::sqrt(yaw2 / count);
    m.limb_joint_rms = joint_count > 0 ? std::sqrt(joint2 / joint_count) : 0.0;
    m.swing_foot_rms = std::sqrt(swing2 / count);
  }

  long planner_count = 0;
  for (const LogRecord& r : log) {
    m.mean_wbc_ms += r.wbc_solve_ms;
    m.max_wbc_ms = std::max(m.max_wbc_ms, r.wbc_solve_ms);
    if (r.planner_tick != 0) {
      m.mean_planner_ms += r.plan_solve_ms;
      m.max_planner_ms = std::max(m.max_planner_ms, r.plan_solve_ms);
      ++planner_count;
    }
  }
  m.mean_wbc_ms /= static_cast<double>(log.size());
  if (planner_count > 0) m.mean_planner_ms /= static_cast<double>(planner_count);
  return m;
}

std::string metricsText(const Metrics& m) {
  std::ostringstream os;
  os << "velocity_rms_mps " << m.vel_rms << "\n"
     << "height_rms_m " << m.height_rms << "\n"
     << "roll_rms_rad " << m.roll_rms << "\n"
     << "pitch_rms_rad " << m.pitch_rms << "\n"
     << "yaw_rms_rad " << m.yaw_rms << "\n"
     << "limb_joint_rms_rad " << m.limb_joint_rms << "\n"
     << "swing_foot_rms_m " << m.swing_foot_rms << "\n"
     << "fall " << (m.fall ? 1 : 0) << "\n"
     << "mean_planner_ms " << m.mean_planner_ms << "\n"
     << "max_planner_ms " << m.max_planner_ms << "\n"
     << "mean_wbc_ms " << m.mean_wbc_ms << "\n"
     << "max_wbc_ms " << m.max_wbc_ms << "\n";
  return os.str();
}

}  // namespace kdwbc
