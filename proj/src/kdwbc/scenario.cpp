#include "kdwbc/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace kdwbc {

CommandFn ScenarioConfig::commandFn() const {
  std::vector<CommandSetpoint> pts = command;
  if (pts.empty()) pts.push_back(CommandSetpoint{});
  return [pts](double t) {
    CommandSample s;
    if (t <= pts.front().t) {
      const CommandSetpoint& p = pts.front();
      return CommandSample{p.vx, p.vy, p.yaw_rate, p.height};
    }
    if (t >= pts.back().t) {
      const CommandSetpoint& p = pts.back();
      return CommandSample{p.vx, p.vy, p.yaw_rate, p.height};
    }
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      if (t >= pts[i].t && t <= pts[i + 1].t) {
        const double a = (t - pts[i].t) / std::max(pts[i + 1].t - pts[i].t, 1e-12);
        s.vx = (1 - a) * pts[i].vx + a * pts[i + 1].vx;
        s.vy = (1 - a) * pts[i].vy + a * pts[i + 1].vy;
        s.yaw_rate = (1 - a) * pts[i].yaw_rate + a * pts[i + 1].yaw_rate;
        s.height = (1 - a) * pts[i].height + a * pts[i + 1].height;
        return s;
      }
    }
    return s;
  };
}

void ScenarioConfig::validate() const {
  if (model_path.empty()) throw ConfigError("scenario: model path missing");
  if (!(duration > 0.0)) throw ConfigError("scenario: duration must be positive");
  for (size_t i = 1; i < command.size(); ++i) {
    if (command[i].t < command[i - 1].t) throw ConfigError("scenario: command timestamps must be sorted");
  }
  for (const Disturbance& d : disturbances) {
    if (!(d.duration > 0.0)) throw ConfigError("scenario: disturbance duration must be positive");
  }
  planner.validate();
  wbc_gains.validate();
  if (sim_substeps < 1 || sim_substeps > 16) throw ConfigError("scenario: sim substeps outside 1..16");
}

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("scenario line " + std::to_string(line) + ": " + msg);
}

double num(const std::string& tok, int line) {
  try {
    size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) fail(line, "bad number '" + tok + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(line, "bad number '" + tok + "'");
  }
}

}  // namespace

ScenarioConfig loadScenarioFromString(const std::string& text, const std::string& base_dir) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string key;
    if (!(ls >> key)) continue;
    if (key.front() == '[') {
      if (key.back() != ']') fail(line_no, "malformed section header");
      section = key.substr(1, key.size() - 2);
      continue;
    }
    std::string eq;
    if (!(ls >> eq) || eq != "=") fail(line_no, "expected 'key = value...'");
    std::vector<std::string> args;
    for (std::string tok; ls >> tok;) args.push_back(tok);
    if (args.empty()) fail(line_no, "missing value for '" + key + "'");
    auto one = [&]() {
      if (args.size() != 1) fail(line_no, "'" + key + "' expects one value");
      return args[0];
    };
    auto oneNum = [&]() { return num(one(), line_no); };

    if (section == "scenario") {
      if (key == "model") {
        cfg.model_path = base_dir.empty() ? one() : base_dir + "/" + one();
      } else if (key == "controller") {
        const std::string v = one();
        if (v == "ch") cfg.controller = ControllerKind::Hierarchical;
        else if (v == "cnh") cfg.controller = ControllerKind::Flat;
        else fail(line_no, "controller must be 'ch' or 'cnh'");
      } else if (key == "duration") {
        cfg.duration = oneNum();
      } else if (key == "seed") {
        cfg.seed = static_cast<uint64_t>(oneNum());
      } else {
        fail(line_no, "unknown [scenario] key '" + key + "'");
      }
    } else if (section == "command") {
      if (key != "setpoint" || args.size() != 5) fail(line_no, "[command] expects: setpoint = t vx vy yaw_rate height");
      CommandSetpoint p;
      p.t = num(args[0], line_no);
      p.vx = num(args[1], line_no);
      p.vy = num(args[2], line_no);
      p.yaw_rate = num(args[3], line_no);
      p.height = num(args[4], line_no);
      cfg.command.push_back(p);
    } else if (section == "gait") {
      if (key == "mode") {
        const std::string v = one();
        if (v == "stand") cfg.gait.mode = GaitMode::Stand;
        else if (v == "walk") cfg.gait.mode = GaitMode::Walk;
        else fail(line_no, "gait mode must be 'stand' or 'walk'");
      } else if (key == "stance") {
        cfg.gait.stance_time = oneNum();
      } else if (key == "swing") {
        cfg.gait.swing_time = oneNum();
      } else if (key == "walk_start") {
        cfg.gait.walk_start_time = oneNum();
      } else {
        fail(line_no, "unknown [gait] key '" + key + "'");
      }
    } else if (section == "planner") {
      OcpConfig& p = cfg.planner;
      if (key == "horizon") p.horizon = oneNum();
      else if (key == "nodes") p.nodes = static_cast<int>(oneNum());
      else if (key == "q_momentum") p.q_momentum = oneNum();
      else if (key == "q_base_pose") p.q_base_pose = oneNum();
      else if (key == "q_joints") p.q_joints = oneNum();
      else if (key == "r_forces") p.r_forces = oneNum();
      else if (key == "r_joint_vel") p.r_joint_vel = oneNum();
      else if (key == "xi_rbf") p.xi_rbf = oneNum();
      else if (key == "delta_rbf") p.delta_rbf = oneNum();
      else if (key == "mu") p.mu_s = oneNum();
      else if (key == "fz_max") p.fz_max = oneNum();
      else if (key == "eps_feet") p.eps_feet = oneNum();
      else if (key == "nominal_height") p.nominal_height = oneNum();
      else if (key == "capture_gain") p.capture_gain = oneNum();
      else if (key == "position_feedback_gain") p.position_feedback_gain = oneNum();
      else if (key == "position_feedback_clamp") p.position_feedback_clamp = oneNum();
      else if (key == "apex_height") p.apex_height = oneNum();
      else if (key == "sqp_iterations") p.max_sqp_iterations = static_cast<int>(oneNum());
      else fail(line_no, "unknown [planner] key '" + key + "'");
    } else if (section == "wbc") {
      WbcGains& g = cfg.wbc_gains;
      if (key == "kp_swing") g.kp_swing = oneNum();
      else if (key == "kd_swing") g.kd_swing = oneNum();
      else if (key == "kp_joint") g.kp_joint = oneNum();
      else if (key == "kd_joint") g.kd_joint = oneNum();
      else if (key == "kp_base" || key == "kd_base") {
        if (args.size() != 6) fail(line_no, "'" + key + "' expects 6 values");
        vector6_t v;
        for (int i = 0; i < 6; ++i) v[i] = num(args[static_cast<size_t>(i)], line_no);
        (key == "kp_base" ? g.kp_base : g.kd_base) = v;
      } else if (key == "mu") {
        cfg.wbc_mu = oneNum();
      } else if (key == "flat_limb") {
        cfg.flat_weights.limb = oneNum();
      } else if (key == "flat_base") {
        cfg.flat_weights.base = oneNum();
      } else if (key == "flat_force") {
        cfg.flat_weights.force = oneNum();
      } else {
        fail(line_no, "unknown [wbc] key '" + key + "'");
      }
    } else if (section == "sim") {
      if (key == "k_n") cfg.sim_params.k_n = oneNum();
      else if (key == "d_n") cfg.sim_params.d_n = oneNum();
      else if (key == "mu") cfg.sim_params.mu = oneNum();
      else if (key == "substeps") cfg.sim_substeps = static_cast<int>(oneNum());
      else if (key == "noise_sigma") cfg.noise_sigma_v = oneNum();
      else fail(line_no, "unknown [sim] key '" + key + "'");
    } else if (section == "terrain") {
      if (key != "step" || args.size() != 2) fail(line_no, "[terrain] expects: step = x_start height");
      cfg.terrain.steps.push_back({num(args[0], line_no), num(args[1], line_no)});
    } else if (section == "disturbance") {
      if (key != "push" || args.size() != 6) {
        fail(line_no, "[disturbance] expects: push = start duration fx fy fz link");
      }
      Disturbance d;
      d.start = num(args[0], line_no);
      d.duration = num(args[1], line_no);
      d.force = vector3_t(num(args[2], line_no), num(args[3], line_no), num(args[4], line_no));
      cfg.disturbances.push_back(d);
      cfg.disturbance_link = args[5];
    } else if (section.empty()) {
      fail(line_no, "key '" + key + "' before any section");
    } else {
      fail(line_no, "unknown section '" + section + "'");
    }
  }
  std::sort(cfg.terrain.steps.begin(), cfg.terrain.steps.end(),
            [](const Terrain::Step& a, const Terrain::Step& b) { return a.x_start < b.x_start; });
  cfg.validate();
  return cfg;
}

ScenarioConfig loadScenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const size_t slash = path.find_last_of('/');
  const std::string base_dir = slash == std::string::npos ? std::string() : path.substr(0, slash);
  return loadScenarioFromString(ss.str(), base_dir);
}

}  // namespace kdwbc
