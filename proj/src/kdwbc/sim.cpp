#include "kdwbc/sim.hpp"

#include "kdwbc/geometry.hpp"
#include "kdwbc/kinematics.hpp"

namespace kdwbc {

vector3_t contactForce(const vector3_t& position, const vector3_t& velocity, double penetration,
                       vector3_t& anchor, const ContactParams& params) {
  if (penetration <= 0.0) {
    anchor = position;
    return vector3_t::Zero();
  }
  const double fn = std::max(0.0, params.k_n * penetration - params.d_n * velocity.z());
  if (fn <= 0.0) {
    anchor = position;
    return vector3_t::Zero();
  }
  Eigen::Vector2d ft = -params.k_n * (position.head<2>() - anchor.head<2>()) - params.d_n * velocity.head<2>();
  const double ft_max = params.mu * fn;
  if (ft.norm() > ft_max) {
    ft *= ft_max / ft.norm();
    // slide the anchor so the spring carries exactly the clamped force
    anchor.head<2>() = position.head<2>() + ft / params.k_n;
  }
  return vector3_t(ft.x(), ft.y(), fn);
}

Simulator::Simulator(const RobotModel& model, Terrain terrain, ContactParams params, int substeps)
    : model_(model), terrain_(std::move(terrain)), params_(params), substeps_(std::max(1, substeps)) {}

SimState Simulator::makeState(const vector_t& q, const vector_t& v) const {
  SimState s;
  s.gs = GeneralizedState(q, v);
  s.gs.validate(model_);
  const ForwardKinematics fk = forwardKinematics(model_, q);
  for (int c = 0; c < kNumContacts; ++c) {
    const size_t ci = static_cast<size_t>(c);
    s.contacts[ci].position = fk.contact_positions[ci];
    s.contacts[ci].anchor = fk.contact_positions[ci];
    s.contacts[ci].penetration = terrain_.height(fk.contact_positions[ci].x(), fk.contact_positions[ci].y()) -
                                 fk.contact_positions[ci].z();
  }
  return s;
}

SimState Simulator::step(const SimState& state, const vector_t& tau, const DisturbanceSchedule& disturbances,
                         double dt) const {
  if (!(dt > 0.0)) throw std::invalid_argument("Simulator::step: dt must be > 0");
  if (tau.size() != model_.n_j) throw std::invalid_argument("Simulator::step: tau dimension mismatch");
  SimState s = state;
  const double sub_dt = dt / substeps_;
  for (int i = 0; i < substeps_; ++i) {
    s = substep(s, tau, disturbances, sub_dt);
  }
  return s;
}

SimState Simulator::substep(const SimState& state, const vector_t& tau, const DisturbanceSchedule& disturbances,
                            double dt) const {
  const vector_t& q = state.gs.q;
  const vector_t& v = state.gs.v;
  const ForwardKinematics fk = forwardKinematics(model_, q);

  SimState next = state;
  vector_t gen_base = -nonlinearEffects(model_, q, v);
  gen_base.tail(model_.n_j) += tau;
  for (const Disturbance& d : disturbances) {
    if (state.time >= d.start && state.time < d.start + d.duration) {
      gen_base += pointJacobian(model_, fk, d.link, vector3_t::Zero()).transpose() * d.force;
    }
  }

  const matrix_t M = massMatrix(model_, q);

  // Contact springs are explicit, the dampers implicit in the new velocity:
  // (M + dt J' D J) v_new = M v + dt (gen + J' f_spring). The implicit damper
  // keeps the stiff normal contact stable at the 800 Hz tick. Points whose
  // clamped normal force vanishes are removed and the solve repeated.
  std::array<bool, kNumContacts> active{};
  std::array<vector3_t, kNumContacts> f_spring{};
  std::array<matrix_t, kNumContacts> J{};
  for (int c = 0; c < kNumContacts; ++c) {
    const size_t ci = static_cast<size_t>(c);
    const vector3_t pos = fk.contact_positions[ci];
    const double pen = terrain_.height(pos.x(), pos.y()) - pos.z();
    next.contacts[ci] = ContactPointState{pos, pen, pos, vector3_t::Zero()};
    active[ci] = pen > 0.0;
    if (active[ci]) {
      J[ci] = contactJacobian(model_, fk, c);
      f_spring[ci] = vector3_t::Zero();
      f_spring[ci].z() = params_.k_n * pen;
      f_spring[ci].head<2>() = -params_.k_n * (pos.head<2>() - state.contacts[ci].anchor.head<2>());
    }
  }

  vector_t v_new;
  for (int pass = 0; pass < kNumContacts + 1; ++pass) {
    vector_t rhs = M * v + dt * gen_base;
    matrix_t W = M;
    for (int c = 0; c < kNumContacts; ++c) {
      const size_t ci = static_cast<size_t>(c);
      if (!active[ci]) continue;
      rhs += dt * (J[ci].transpose() * f_spring[ci]);
      W += (dt * params_.d_n) * (J[ci].transpose() * J[ci]);
    }
    Eigen::LLT<matrix_t> llt(W);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("Simulator::step: mass matrix factorization failed (time " +
                               std::to_string(state.time) + ")");
    }
    v_new = llt.solve(rhs);

    bool removed = false;
    for (int c = 0; c < kNumContacts; ++c) {
      const size_t ci = static_cast<size_t>(c);
      if (!active[ci]) continue;
      const vector3_t vel_new = J[ci] * v_new;
      if (f_spring[ci].z() - params_.d_n * vel_new.z() <= 0.0) {
        active[ci] = false;
        removed = true;
      }
    }
    if (!removed) break;
  }

  // reported forces carry the normal and friction clamps
  for (int c = 0; c < kNumContacts; ++c) {
    const size_t ci = static_cast<size_t>(c);
    if (!active[ci]) continue;
    const vector3_t vel_new = J[ci] * v_new;
    vector3_t anchor = state.contacts[ci].anchor;
    vector3_t f;
    f.z() = std::max(0.0, f_spring[ci].z() - params_.d_n * vel_new.z());
    Eigen::Vector2d ft = f_spring[ci].head<2>() - params_.d_n * vel_new.head<2>();
    const double ft_max = params_.mu * f.z();
    if (ft.norm() > ft_max) {
      ft *= ft_max / std::max(ft.norm(), 1e-12);
      anchor.head<2>() = next.contacts[ci].position.head<2>() + ft / params_.k_n;
    }
    f.head<2>() = ft;
    next.contacts[ci].force = f;
    next.contacts[ci].anchor = anchor;
  }
  const vector_t v_mid = 0.5 * (v + v_new);
  vector_t q_new = q;
  q_new.head<3>() += dt * v_mid.head<3>();
  q_new.segment<3>(3) += dt * eulerRatesFromAngularVelocity(q.segment<3>(3), v_mid.segment<3>(3));
  q_new.tail(model_.n_j) += dt * v_mid.tail(model_.n_j);

  next.gs.q = q_new;
  next.gs.v = v_new;
  next.time = state.time + dt;
  return next;
}

GeneralizedState MeasurementModel::measure(const SimState& state) {
  GeneralizedState out = state.gs;
  if (sigma_v_ > 0.0) {
    for (int i = 0; i < out.v.size(); ++i) {
      out.v[i] += sigma_v_ * gauss_(rng_);
    }
  }
  return out;
}

}  // namespace kdwbc
