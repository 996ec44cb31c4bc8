#pragma once

#include <array>

#include "kdwbc/types.hpp"

namespace kdwbc {

// Cubic Hermite segment between (t0, p0, v0) and (t1, p1, v1).
struct CubicSegment {
  double t0 = 0.0, t1 = 1.0;
  vector3_t p0 = vector3_t::Zero(), p1 = vector3_t::Zero();
  vector3_t v0 = vector3_t::Zero(), v1 = vector3_t::Zero();

  vector3_t position(double t) const;
  vector3_t velocity(double t) const;
};

// Swing reference for one foot: the midpoint follows a cubic from liftoff to
// target (zero end velocities), z in two cubic segments through an apex above
// the higher endpoint at the half-way time. Toe/heel references ride on the
// midpoint at per-point offsets that blend from the measured pattern at the
// last replan anchor into a rigid flat touchdown pattern, so the two point
// references stay mutually consistent and pass exactly through the measured
// points at the anchor. Evaluation clamps outside the swing window.
class SwingReference {
 public:
  SwingReference() = default;
  SwingReference(const vector3_t& liftoff_mid, const vector3_t& target_mid, double t_liftoff, double duration,
                 double apex_height);

  vector3_t position(double t) const;         // midpoint
  vector3_t velocity(double t) const;
  vector3_t nominalPosition(double t) const;  // midpoint without the replan offset

  vector3_t pointPosition(int contact, double t) const;
  vector3_t pointVelocity(int contact, double t) const;

  double tLiftoff() const { return t_liftoff_; }
  double tTouchdown() const { return t_liftoff_ + duration_; }
  const vector3_t& target() const { return target_; }
  const vector3_t& liftoff() const { return liftoff_; }

  // rigid touchdown pattern (toe/heel offsets from the midpoint, flat)
  void setTargetOffsets(const vector3_t& toe, const vector3_t& heel);

  // re-anchor at t: the reference passes through the measured midpoint/points
  // at t and blends back to nominal by touchdown
  void replanAnchor(double t, const vector3_t& measured_mid, const vector3_t& measured_toe_offset,
                    const vector3_t& measured_heel_offset);

 private:
  vector3_t liftoff_ = vector3_t::Zero();
  vector3_t target_ = vector3_t::Zero();
  double t_liftoff_ = 0.0, duration_ = 1.0;
  CubicSegment xy_;
  CubicSegment z_up_, z_dn_;
  std::array<vector3_t, 2> target_offsets_{vector3_t::Zero(), vector3_t::Zero()};
  std::array<vector3_t, 2> measured_offsets_{vector3_t::Zero(), vector3_t::Zero()};
  vector3_t mid_offset_ = vector3_t::Zero();
  double t_anchor_ = 0.0;
  bool anchored_ = false;

  double blend(double t) const;  // 1 at anchor, 0 at touchdown, zero end slopes
  double blendRate(double t) const;
};

}  // namespace kdwbc
