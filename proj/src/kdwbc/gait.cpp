#include "kdwbc/gait.hpp"

#include <cmath>
#include <stdexcept>

namespace kdwbc {

namespace {

double wrapPhase(double t, double period) {
  const double p = std::fmod(t, period);
  return p < 0.0 ? p + period : p;
}

}  // namespace

void ContactSchedule::validate() const {
  if (!(stance_time > 0.0) || !(swing_time > 0.0)) {
    throw std::invalid_argument("ContactSchedule: phase durations must be positive");
  }
  if (mode == GaitMode::Walk && stance_time < swing_time) {
    throw std::invalid_argument("ContactSchedule: stance < swing would create a flight phase");
  }
}

bool ContactSchedule::closed(int contact, double t) const {
  if (mode == GaitMode::Stand || t < walk_start) return true;
  const double offset = footOfContact(contact) == 0 ? 0.0 : 0.5 * period();
  return wrapPhase(t - phase_origin - offset, period()) < stance_time;
}

bool ContactSchedule::swingWindow(int foot, double t, double& liftoff, double& touchdown) const {
  if (mode == GaitMode::Stand) return false;
  const double offset = foot == 0 ? 0.0 : 0.5 * period();
  const double t_eff = std::max(t, walk_start);
  const double local = t_eff - phase_origin - offset;
  double cycle = std::floor(local / period());
  double lo = cycle * period() + stance_time;
  if (local >= lo + swing_time) {
    cycle += 1.0;
    lo = cycle * period() + stance_time;
  }
  liftoff = lo + phase_origin + offset;
  touchdown = liftoff + swing_time;
  if (liftoff < walk_start) {
    // the first swing of this foot happens after walking starts
    return swingWindow(foot, touchdown + 1e-9, liftoff, touchdown);
  }
  return true;
}

ContactSchedule scheduleGait(GaitMode mode, double phase_origin, double stance_time, double swing_time) {
  ContactSchedule s;
  s.mode = mode;
  s.phase_origin = phase_origin;
  s.stance_time = stance_time;
  s.swing_time = swing_time;
  s.validate();
  return s;
}

}  // namespace kdwbc
