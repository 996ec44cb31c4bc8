#pragma once

#include <random>
#include <string>

#include "kdwbc/robot_model.hpp"

#ifndef KDWBC_REPO_ROOT
#define KDWBC_REPO_ROOT "."
#endif

namespace kdwbc::test {

inline std::string repoPath(const std::string& rel) { return std::string(KDWBC_REPO_ROOT) + "/" + rel; }

inline RobotModel loadBiped24() { return loadModelFromFile(repoPath("models/biped24.kdm")); }
inline RobotModel loadBiped18() { return loadModelFromFile(repoPath("models/biped18.kdm")); }

// Seeded random configuration: joints within limits, pitch kept away from the
// euler singularity.
inline vector_t randomConfiguration(const RobotModel& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  vector_t q(model.nv());
  for (int i = 0; i < 3; ++i) q[i] = u(rng);
  q[3] = M_PI * u(rng);         // yaw
  q[4] = 1.2 * u(rng);          // pitch, within (-pi/2, pi/2)
  q[5] = M_PI / 2.0 * u(rng);   // roll
  for (int j = 0; j < model.n_j; ++j) {
    const double lo = model.limits.q_min[j], hi = model.limits.q_max[j];
    q[6 + j] = lo + (hi - lo) * (0.5 * (u(rng) + 1.0));
  }
  return q;
}

inline vector_t randomVelocity(const RobotModel& model, std::mt19937_64& rng, double scale = 2.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  vector_t v(model.nv());
  for (int i = 0; i < model.nv(); ++i) v[i] = scale * u(rng);
  return v;
}

}  // namespace kdwbc::test
