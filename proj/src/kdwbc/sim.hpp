#pragma once

#include <array>
#include <random>

#include "kdwbc/dynamics.hpp"
#include "kdwbc/robot_model.hpp"
#include "kdwbc/terrain.hpp"

namespace kdwbc {

struct ContactParams {
  double k_n = 1e5;   // normal spring, N/m
  double d_n = 1e3;   // normal damper, N*s/m
  double mu = 0.8;    // simulator friction coefficient
};

struct ContactPointState {
  vector3_t position = vector3_t::Zero();  // world
  double penetration = 0.0;                // > 0 below terrain
  vector3_t anchor = vector3_t::Zero();    // tangential spring anchor (world xy)
  vector3_t force = vector3_t::Zero();     // world
};

struct SimState {
  GeneralizedState gs;
  double time = 0.0;
  std::array<ContactPointState, kNumContacts> contacts;
};

struct Disturbance {
  double start = 0.0;
  double duration = 0.0;
  vector3_t force = vector3_t::Zero();  // world frame
  int link = 0;                         // applied at the link origin
};
using DisturbanceSchedule = std::vector<Disturbance>;

// Penalty force at one contact point. normal: max(0, k_n*pen - d_n*zdot);
// tangential: spring from the anchor clamped to the friction cone, the anchor
// slides when the clamp engages (stick/slip).
vector3_t contactForce(const vector3_t& position, const vector3_t& velocity, double penetration,
                       vector3_t& anchor, const ContactParams& params);

class Simulator {
 public:
  Simulator(const RobotModel& model, Terrain terrain, ContactParams params, int substeps = 1);

  SimState makeState(const vector_t& q, const vector_t& v) const;

  // Semi-implicit Euler: v += dt * M^{-1}(S't + Jc'F + Jd'F_dist - n), then the
  // coordinates advance with the midpoint velocity through the euler-rate map.
  SimState step(const SimState& state, const vector_t& tau, const DisturbanceSchedule& disturbances,
                double dt) const;

  const Terrain& terrain() const { return terrain_; }
  const ContactParams& params() const { return params_; }
  const RobotModel& model() const { return model_; }

 private:
  SimState substep(const SimState& state, const vector_t& tau, const DisturbanceSchedule& disturbances,
                   double dt) const;

  const RobotModel& model_;
  Terrain terrain_;
  ContactParams params_;
  int substeps_;
};

// Ground-truth measurement with optional seeded Gaussian velocity noise.
class MeasurementModel {
 public:
  MeasurementModel(double sigma_v, uint64_t seed) : sigma_v_(sigma_v), rng_(seed) {}

  GeneralizedState measure(const SimState& state);

 private:
  double sigma_v_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

}  // namespace kdwbc
