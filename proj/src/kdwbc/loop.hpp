#pragma once

#include <functional>

#include "kdwbc/csv.hpp"
#include "kdwbc/scenario.hpp"

namespace kdwbc {

inline constexpr double kWbcTickDt = 1.25e-3;  // 800 Hz
inline constexpr int kPlannerTickRatio = 8;    // planner at 100 Hz

struct RunResult {
  std::vector<LogRecord> log;
  Metrics metrics;
  int exit_code = 0;  // 0 ok, 2 fall, 3 solver hard error
  std::string error;
  std::vector<Plan> plans;  // populated when dump_plans is set
  int n_v = 0, n_j = 0;
};

// Hooks for test instrumentation; both optional.
struct TickObserver {
  std::function<void(const Plan&)> on_plan;
  std::function<void(const WbcContext&, const std::vector<Task>&, const WbcSolution&)> on_tick;
};

// The two-rate closed loop: measure, sample the plan, build the Table-1 task
// set, solve (cascade or flat), extract torques, step the simulator; the
// planner replans every kPlannerTickRatio ticks. Deterministic for a fixed
// config and seed unless cfg.threaded is set.
RunResult runScenario(const ScenarioConfig& cfg, const TickObserver* observer = nullptr);

// Plan dump: one row per (cycle, node) with states and inputs.
void exportPlansCsv(const std::vector<Plan>& plans, const std::string& path);

}  // namespace kdwbc
