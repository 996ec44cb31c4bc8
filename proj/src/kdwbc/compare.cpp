#include "kdwbc/compare.hpp"

#include <sstream>

namespace kdwbc {

CompareResult compareControllers(const ScenarioConfig& cfg) {
  CompareResult out;
  ScenarioConfig a = cfg;
  a.controller = ControllerKind::Hierarchical;
  ScenarioConfig b = cfg;
  b.controller = ControllerKind::Flat;
  out.ch = runScenario(a);
  out.cnh = runScenario(b);
  out.exit_code = std::max(out.ch.exit_code, out.cnh.exit_code);

  auto arm = [](const char* name, const RunResult& r) {
    std::ostringstream os;
    os << "[" << name << "]\n";
    if (r.exit_code != 0) os << "status error_code_" << r.exit_code << " " << r.error << "\n";
    os << metricsText(r.metrics);
    double mean_res[4] = {0, 0, 0, 0};
    for (const LogRecord& rec : r.log) {
      for (int p = 0; p < 4; ++p) mean_res[p] += rec.hqp_residuals[static_cast<size_t>(p)];
    }
    for (int p = 0; p < 4; ++p) {
      os << "mean_level" << p + 1 << "_residual "
         << (r.log.empty() ? 0.0 : mean_res[p] / static_cast<double>(r.log.size())) << "\n";
    }
    return os.str();
  };

  std::ostringstream os;
  os << arm("ch", out.ch) << "\n" << arm("cnh", out.cnh) << "\n[comparison]\n";
  os << "limb_joint_rms_ratio_cnh_over_ch "
     << (out.ch.metrics.limb_joint_rms > 0 ? out.cnh.metrics.limb_joint_rms / out.ch.metrics.limb_joint_rms : 0.0)
     << "\n";
  os << "swing_foot_rms_ratio_cnh_over_ch "
     << (out.ch.metrics.swing_foot_rms > 0 ? out.cnh.metrics.swing_foot_rms / out.ch.metrics.swing_foot_rms : 0.0)
     << "\n";
  out.report = os.str();
  return out;
}

}  // namespace kdwbc
