#pragma once

#include "kdwbc/loop.hpp"

namespace kdwbc {

struct CompareResult {
  RunResult ch, cnh;
  std::string report;
  int exit_code = 0;  // worst of both arms
};

// Runs the scenario with both controllers at the same seed and summarizes the
// limb-vs-base tracking comparison. Per-arm failures are reported alongside
// the surviving arm's results.
CompareResult compareControllers(const ScenarioConfig& cfg);

}  // namespace kdwbc
