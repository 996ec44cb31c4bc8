#pragma once

#include <string>

#include "kdwbc/planner.hpp"
#include "kdwbc/sim.hpp"
#include "kdwbc/wbc.hpp"

namespace kdwbc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ControllerKind { Hierarchical, Flat };  // ch | cnh

// One command setpoint; the profile interpolates linearly between setpoints
// and holds the boundary values outside.
struct CommandSetpoint {
  double t = 0.0;
  double vx = 0.0, vy = 0.0, yaw_rate = 0.0, height = 0.9;
};

struct ScenarioConfig {
  std::string model_path;
  ControllerKind controller = ControllerKind::Hierarchical;
  double duration = 10.0;
  uint64_t seed = 1;
  bool dump_plans = false;
  bool threaded = false;

  GaitSettings gait;
  OcpConfig planner;
  WbcGains wbc_gains;
  FlatWeights flat_weights;
  double wbc_mu = 0.7;

  ContactParams sim_params;
  int sim_substeps = 1;
  double noise_sigma_v = 0.0;

  Terrain terrain;
  DisturbanceSchedule disturbances;
  std::string disturbance_link = "base";

  std::vector<CommandSetpoint> command;

  CommandFn commandFn() const;
  void validate() const;
};

// Sectioned key/value text format; see README for the reference.
ScenarioConfig loadScenario(const std::string& path);
ScenarioConfig loadScenarioFromString(const std::string& text, const std::string& base_dir);

}  // namespace kdwbc
