#include "kdwbc/loop.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <thread>

namespace kdwbc {

namespace {

// latest-wins plan exchange for the optional threaded mode
class PlannerWorker {
 public:
  PlannerWorker(KinoDynamicsPlanner& planner, const CommandFn& cmd) : planner_(planner), cmd_(cmd) {
    thread_ = std::thread([this] { run(); });
  }

  ~PlannerWorker() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
  }

  void request(double t, const GeneralizedState& gs) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      req_time_ = t;
      req_state_ = gs;
      has_request_ = true;
    }
    cv_.notify_all();
  }

  bool latest(Plan& out) {
    std::lock_guard<std::mutex> lk(mu_);
    if (!has_plan_) return false;
    out = plan_;
    return true;
  }

 private:
  void run() {
    for (;;) {
      double t;
      GeneralizedState gs;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [this] { return stop_ || has_request_; });
        if (stop_) return;
        t = req_time_;
        gs = req_state_;
        has_request_ = false;
      }
      Plan warm;
      const bool have_warm = latest(warm);
      Plan p = planner_.solve(t, gs, cmd_, have_warm ? &warm : nullptr);
      {
        std::lock_guard<std::mutex> lk(mu_);
        plan_ = std::move(p);
        has_plan_ = true;
      }
    }
  }

  KinoDynamicsPlanner& planner_;
  CommandFn cmd_;
  std::thread thread_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
  bool has_request_ = false;
  double req_time_ = 0.0;
  GeneralizedState req_state_;
  Plan plan_;
  bool has_plan_ = false;
};

int findLink(const RobotModel& model, const std::string& name) {
  for (size_t i = 0; i < model.links.size(); ++i) {
    if (model.links[i].name == name) return static_cast<int>(i);
  }
  throw ConfigError("disturbance link '" + name + "' not found in the model");
}

double swingFootError(const WbcContext& ctx) {
  double err2 = 0.0;
  int n = 0;
  for (int c = 0; c < kNumContacts; ++c) {
    if (ctx.closed[static_cast<size_t>(c)] || ctx.swing == nullptr) continue;
    const SwingReference* ref = ctx.swing->activeRef(footOfContact(c), ctx.t);
    if (ref == nullptr) continue;
    err2 += (ctx.fk.contact_positions[static_cast<size_t>(c)] - ref->pointPosition(c, ctx.t)).squaredNorm();
    ++n;
  }
  return n > 0 ? std::sqrt(err2 / n) : 0.0;
}

}  // namespace

RunResult runScenario(const ScenarioConfig& cfg, const TickObserver* observer) {
  RunResult out;
  const RobotModel model = loadModelFromFile(cfg.model_path);
  out.n_v = model.nv();
  out.n_j = model.n_j;

  DisturbanceSchedule disturbances = cfg.disturbances;
  for (Disturbance& d : disturbances) d.link = findLink(model, cfg.disturbance_link);

  Simulator sim(model, cfg.terrain, cfg.sim_params, cfg.sim_substeps);
  MeasurementModel meas(cfg.noise_sigma_v, cfg.seed);

  // start at the nominal stance on the terrain under the feet
  vector_t q0 = vector_t::Zero(model.nv());
  q0.tail(model.n_j) = model.nominal_joints;
  q0[2] = cfg.planner.nominal_height + cfg.terrain.height(0.0, 0.0) + 1e-4;
  {
    // settle the feet onto the terrain exactly
    const ForwardKinematics fk = forwardKinematics(model, q0);
    double min_clearance = std::numeric_limits<double>::infinity();
    for (const vector3_t& p : fk.contact_positions) {
      min_clearance = std::min(min_clearance, p.z() - cfg.terrain.height(p.x(), p.y()));
    }
    q0[2] -= min_clearance;
    q0[2] -= model.total_mass * kGravity / (kNumContacts * cfg.sim_params.k_n);
  }
  SimState sim_state = sim.makeState(q0, vector_t::Zero(model.nv()));

  KinoDynamicsPlanner planner(model, cfg.planner, cfg.terrain, cfg.gait);
  const CommandFn cmd = cfg.commandFn();
  planner.reset(0.0, sim_state.gs);

  WbcSolver wbc;
  std::unique_ptr<PlannerWorker> worker;
  if (cfg.threaded) worker = std::make_unique<PlannerWorker>(planner, cmd);

  const int ticks = static_cast<int>(std::llround(cfg.duration / kWbcTickDt));
  out.log.reserve(static_cast<size_t>(ticks));

  Plan plan;
  bool fall = false;
  const double nominal_h = cfg.planner.nominal_height;

  for (int k = 0; k < ticks; ++k) {
    const double t = k * kWbcTickDt;
    const GeneralizedState measured = meas.measure(sim_state);

    // fall detection against the local terrain height
    const double ground = cfg.terrain.height(measured.q[0], measured.q[1]);
    if (measured.q[2] - ground < 0.6 * nominal_h || std::abs(measured.q[4]) > 0.8 ||
        std::abs(measured.q[5]) > 0.8) {
      fall = true;
      out.exit_code = 2;
      out.error = "fall detected at t=" + std::to_string(t);
      break;
    }

    if (k % kPlannerTickRatio == 0) {
      if (cfg.threaded) {
        worker->request(t, measured);
        Plan latest;
        if (worker->latest(latest)) plan = std::move(latest);
        if (plan.empty()) {
          // block for the very first plan
          while (plan.empty()) {
            std::this_thread::sleep_for(std::chrono::microseconds(200));
            if (worker->latest(latest)) plan = std::move(latest);
          }
        }
      } else {
        plan = planner.solve(t, measured, cmd, plan.empty() ? nullptr : &plan);
      }
      if (plan.flow_singular) {
        out.exit_code = 3;
        out.error = "planner flow singular at t=" + std::to_string(t);
        break;
      }
      if (cfg.dump_plans) out.plans.push_back(plan);
      if (observer != nullptr && observer->on_plan) observer->on_plan(plan);
    }

    LogRecord rec;
    rec.t = t;
    rec.q = measured.q;
    rec.v = measured.v;
    const auto wbc_start = std::chrono::steady_clock::now();
    try {
      const WbcContext ctx = makeWbcContext(model, t, measured, plan);
      const std::vector<Task> tasks = buildTaskSet(ctx, cfg.wbc_gains, cfg.wbc_mu);
      const WbcSolution sol = cfg.controller == ControllerKind::Hierarchical
                                  ? wbc.solveHierarchical(tasks)
                                  : wbc.solveFlat(tasks, cfg.flat_weights);
      rec.wbc_solve_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wbc_start).count();
      const vector_t tau = computeTorques(ctx, sol.xi);

      rec.x_plan = ctx.x_plan;
      rec.u_plan = ctx.u_plan;
      rec.xi = sol.xi;
      rec.tau = tau;
      rec.hqp_residuals = sol.level_residuals;
      rec.swing_foot_err = swingFootError(ctx);
      if (observer != nullptr && observer->on_tick) observer->on_tick(ctx, tasks, sol);

      sim_state = sim.step(sim_state, tau, disturbances, kWbcTickDt);
    } catch (const WbcError& e) {
      out.exit_code = 3;
      out.error = e.what();
      break;
    } catch (const QpError& e) {
      out.exit_code = 3;
      out.error = e.what();
      break;
    }

    rec.contact_forces = vector_t::Zero(12);
    for (int c = 0; c < kNumContacts; ++c) {
      rec.contact_forces.segment<3>(3 * c) = sim_state.contacts[static_cast<size_t>(c)].force;
    }
    rec.planner_tick = (k % kPlannerTickRatio == 0) ? 1 : 0;
    rec.plan_cost = plan.merit_sequence.empty() ? 0.0 : plan.merit_sequence.back();
    rec.plan_iterations = plan.sqp_iterations;
    rec.plan_solve_ms = plan.solve_ms;
    const CommandSample c = cmd(t);
    rec.cmd = Eigen::Vector4d(c.vx, c.vy, c.yaw_rate, c.height);
    rec.ref_pose = planner.referencePose(t, cmd);
    out.log.push_back(std::move(rec));
  }

  if (!out.log.empty()) {
    out.metrics = computeMetrics(out.log, model.n_j, fall);
  } else {
    out.metrics.fall = fall;
  }
  return out;
}

void exportPlansCsv(const std::vector<Plan>& plans, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("exportPlansCsv: cannot open '" + path + "'");
  f << "cycle,node,t_s,x...,u...\n";
  std::string line;
  auto emit = [&](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    line.append(buf, res.ptr);
  };
  for (size_t p = 0; p < plans.size(); ++p) {
    const Plan& plan = plans[p];
    for (size_t k = 0; k < plan.xs.size(); ++k) {
      line.clear();
      emit(static_cast<double>(p));
      line += ',';
      emit(static_cast<double>(k));
      line += ',';
      emit(plan.times[k]);
      for (int i = 0; i < plan.xs[k].size(); ++i) {
        line += ',';
        emit(plan.xs[k][i]);
      }
      const vector_t& u = plan.us[std::min(k, plan.us.size() - 1)];
      for (int i = 0; i < u.size(); ++i) {
        line += ',';
        emit(u[i]);
      }
      line += '\n';
      f << line;
    }
  }
}

}  // namespace kdwbc
