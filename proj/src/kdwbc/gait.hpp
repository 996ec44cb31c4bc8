#pragma once

#include <array>

#include "kdwbc/types.hpp"

namespace kdwbc {

enum class GaitMode { Stand, Walk };

// Deterministic contact schedule. Walking alternates single support: the left
// foot's pair is closed for stance_time from each period start, the right pair
// half a period later. stance >= swing guarantees no flight phase; both points
// of a foot always toggle together.
struct ContactSchedule {
  GaitMode mode = GaitMode::Stand;
  double stance_time = 0.35;
  double swing_time = 0.35;
  double phase_origin = 0.0;  // walk phase zero time
  double walk_start = 0.0;    // everything closed before this time in walk mode

  double period() const { return stance_time + swing_time; }

  bool closed(int contact, double t) const;

  // swing window [liftoff, touchdown) containing or following t for the foot
  // owning this contact pair; returns false in stand mode.
  bool swingWindow(int foot, double t, double& liftoff, double& touchdown) const;

  void validate() const;
};

inline int footOfContact(int contact) { return contact / 2; }

ContactSchedule scheduleGait(GaitMode mode, double phase_origin, double stance_time, double swing_time);

}  // namespace kdwbc
