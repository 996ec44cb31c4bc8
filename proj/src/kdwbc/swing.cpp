#include "kdwbc/swing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kdwbc {

vector3_t CubicSegment::position(double t) const {
  const double T = t1 - t0;
  const double s = std::clamp((t - t0) / T, 0.0, 1.0);
  const double h00 = 2 * s * s * s - 3 * s * s + 1;
  const double h10 = s * s * s - 2 * s * s + s;
  const double h01 = -2 * s * s * s + 3 * s * s;
  const double h11 = s * s * s - s * s;
  return h00 * p0 + (h10 * T) * v0 + h01 * p1 + (h11 * T) * v1;
}

vector3_t CubicSegment::velocity(double t) const {
  const double T = t1 - t0;
  const double s = std::clamp((t - t0) / T, 0.0, 1.0);
  const double g00 = (6 * s * s - 6 * s) / T;
  const double g10 = 3 * s * s - 4 * s + 1;
  const double g01 = (-6 * s * s + 6 * s) / T;
  const double g11 = 3 * s * s - 2 * s;
  return g00 * p0 + g10 * v0 + g01 * p1 + g11 * v1;
}

SwingReference::SwingReference(const vector3_t& liftoff_mid, const vector3_t& target_mid, double t_liftoff,
                               double duration, double apex_height)
    : liftoff_(liftoff_mid), target_(target_mid), t_liftoff_(t_liftoff), duration_(duration) {
  if (!(duration > 0.0)) throw std::invalid_argument("SwingReference: duration must be positive");
  const double t_td = t_liftoff + duration;
  const double t_apex = t_liftoff + 0.5 * duration;
  xy_ = CubicSegment{t_liftoff, t_td, liftoff_mid, target_mid, vector3_t::Zero(), vector3_t::Zero()};

  const double z_apex = std::max(liftoff_mid.z(), target_mid.z()) + apex_height;
  const vector3_t pa(0, 0, z_apex);
  z_up_ = CubicSegment{t_liftoff, t_apex, vector3_t(0, 0, liftoff_mid.z()), pa, vector3_t::Zero(), vector3_t::Zero()};
  z_dn_ = CubicSegment{t_apex, t_td, pa, vector3_t(0, 0, target_mid.z()), vector3_t::Zero(), vector3_t::Zero()};
}

void SwingReference::setTargetOffsets(const vector3_t& toe, const vector3_t& heel) {
  target_offsets_ = {toe, heel};
  if (!anchored_) measured_offsets_ = target_offsets_;
}

void SwingReference::replanAnchor(double t, const vector3_t& measured_mid, const vector3_t& measured_toe_offset,
                                  const vector3_t& measured_heel_offset) {
  t_anchor_ = std::clamp(t, t_liftoff_, tTouchdown());
  mid_offset_ = measured_mid - nominalPosition(t_anchor_);
  measured_offsets_ = {measured_toe_offset, measured_heel_offset};
  anchored_ = true;
}

double SwingReference::blend(double t) const {
  if (!anchored_) return 0.0;
  const double T = tTouchdown() - t_anchor_;
  if (T <= 1e-9) return 0.0;
  const double s = std::clamp((t - t_anchor_) / T, 0.0, 1.0);
  return 2 * s * s * s - 3 * s * s + 1;
}

double SwingReference::blendRate(double t) const {
  if (!anchored_) return 0.0;
  const double T = tTouchdown() - t_anchor_;
  if (T <= 1e-9) return 0.0;
  const double s = std::clamp((t - t_anchor_) / T, 0.0, 1.0);
  return (6 * s * s - 6 * s) / T;
}

vector3_t SwingReference::nominalPosition(double t) const {
  const double tc = std::clamp(t, t_liftoff_, tTouchdown());
  vector3_t p = xy_.position(tc);
  p.z() = (tc <= z_up_.t1 ? z_up_ : z_dn_).position(tc).z();
  return p;
}

vector3_t SwingReference::position(double t) const {
  return nominalPosition(t) + blend(std::clamp(t, t_liftoff_, tTouchdown())) * mid_offset_;
}

vector3_t SwingReference::velocity(double t) const {
  if (t < t_liftoff_ || t > tTouchdown()) return vector3_t::Zero();
  vector3_t v = xy_.velocity(t);
  v.z() = (t <= z_up_.t1 ? z_up_ : z_dn_).velocity(t).z();
  return v + blendRate(t) * mid_offset_;
}

vector3_t SwingReference::pointPosition(int contact, double t) const {
  const size_t i = static_cast<size_t>(contact % 2);
  const double w = blend(std::clamp(t, t_liftoff_, tTouchdown()));
  return position(t) + w * measured_offsets_[i] + (1.0 - w) * target_offsets_[i];
}

vector3_t SwingReference::pointVelocity(int contact, double t) const {
  const size_t i = static_cast<size_t>(contact % 2);
  return velocity(t) + blendRate(t) * (measured_offsets_[i] - target_offsets_[i]);
}

}  // namespace kdwbc
