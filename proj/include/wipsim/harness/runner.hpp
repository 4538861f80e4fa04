// Copyright 2026 The wipsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Closed-loop scenario execution.
//
// Time is an integer plant-step counter k with t = k dt, so every event is
// applied on exactly one step. Per step:
//   1. commands and arm poses scheduled for step k take effect;
//   2. on control steps the arm drive advances, the sensors are sampled and
//      the balance controller produces wheel torques (held until the next
//      control step);
//   3. on log steps a trace row is recorded, including the muscle tensions
//      each arm needs to hold its pose against gravity and hand loads;
//   4. the plant (and desk, if any) advances one RK4 step.
//
// The arms track their rate-limited drive exactly and act on the plant
// through the combined CoM only; hand forces reach the plant as external
// forces at the mean hand position.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wipsim/arm.hpp"
#include "wipsim/balance.hpp"
#include "wipsim/errors.hpp"
#include "wipsim/harness/config.hpp"
#include "wipsim/harness/envelope.hpp"
#include "wipsim/harness/scenario.hpp"
#include "wipsim/harness/trace.hpp"
#include "wipsim/muscle.hpp"
#include "wipsim/plant.hpp"
#include "wipsim/riccati.hpp"

namespace wipsim {

struct RunResult {
  Trace trace;  // every column
  Report report;

  // The columns selected by the scenario's channel list.
  Trace exported(const Scenario& s) const {
    if (s.channels.empty()) return trace;
    std::vector<std::string> names = s.channels;
    if (std::find(names.begin(), names.end(), "t") == names.end()) names.insert(names.begin(), "t");
    return trace.select(names);
  }
};

namespace detail {

// Noisy, quantized view of the state as the controller sees it.
class Sensors {
 public:
  Sensors(const SensorConfig& cfg, const PlantParams& p, std::uint64_t seed)
      : cfg_(cfg), p_(p), rng_(seed) {}

  PendulumState measure(const PendulumState& s) {
    PendulumState m = s;
    if (cfg_.theta_noise > 0.0) m.theta += cfg_.theta_noise * normal_(rng_);
    if (cfg_.rate_noise > 0.0) {
      m.theta_dot += cfg_.rate_noise * normal_(rng_);
      m.phi_dot += cfg_.rate_noise * normal_(rng_);
    }
    WheelAngles w = wheel_angles(s, p_);
    if (cfg_.encoder_counts > 0) {
      const double q = 2.0 * 3.14159265358979323846 / cfg_.encoder_counts;
      w.left = q * std::floor(w.left / q);
      w.right = q * std::floor(w.right / q);
    }
    m.phi = 0.5 * (w.left + w.right);
    m.psi = yaw_from_odometry(w.left, w.right, p_);
    return m;
  }

 private:
  SensorConfig cfg_;
  PlantParams p_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct DeskState {
  double x = 0.0;  // world x of the face touched by the hands [m]
  double v = 0.0;
};

}  // namespace detail

inline RunResult run_scenario(const Scenario& s) {
  validate_scenario(s);
  const PlantParams& p = s.plant;
  const Timing& tm = s.timing;

  BalanceController ctl;
  ctl.gain = solve_care(build_linear_model(p), s.controller.lqr);
  ctl.yaw = s.controller.yaw;
  ctl.adaptation = s.controller.adaptation;
  ctl.torque_limit = s.controller.torque_limit;
  ctl.control_period = tm.control_period;

  const auto steps_of = [&](double t) { return static_cast<std::int64_t>(std::llround(t / tm.dt)); };
  const std::int64_t n_steps = steps_of(s.duration);
  const std::int64_t ctrl_every = steps_of(tm.control_period);
  const std::int64_t log_every = steps_of(tm.log_period);
  const double inv_dt = 1.0 / tm.dt;
  const auto time_of = [&](std::int64_t k) { return static_cast<double>(k) / inv_dt; };
  // Control-grid events land on control steps exactly.
  const auto control_step_of = [&](double t) {
    return std::llround(t / tm.control_period) * ctrl_every;
  };

  Report report;
  report.scenario = s.name;
  report.seed = s.seed;
  EventCount& cmd_count = report.events["commands"];
  EventCount& pose_count = report.events["arm_poses"];
  EventCount& dist_count = report.events["disturbances"];
  EventCount& ctrl_count = report.events["control_ticks"];
  EventCount& log_count = report.events["log_rows"];
  cmd_count.scheduled = s.commands.size();
  pose_count.scheduled = s.arm_poses.size();
  ctrl_count.scheduled = static_cast<std::size_t>(n_steps / ctrl_every + 1);
  log_count.scheduled = static_cast<std::size_t>(n_steps / log_every + 1);

  struct Window {
    std::int64_t begin = 0;  // first active step
    std::int64_t end = 0;    // one past the last active step
  };
  std::vector<Window> windows;
  for (const auto& d : s.disturbances) {
    Window w{steps_of(d.t_start), steps_of(d.t_end)};
    // Wall contact is a closed window.
    if (d.kind == DisturbanceKind::wall_contact) w.end += 1;
    windows.push_back(w);
    if (w.end > w.begin && w.begin <= n_steps) ++dist_count.scheduled;
  }

  ArmModel arms = s.arm_model();
  std::vector<std::vector<double>> xi_target;
  for (const auto& arm : arms.arms) xi_target.push_back(arm.pitch);
  EffectiveBody body = effective_body(p, arms);
  ComOffset offset = arms.arms.empty() ? ComOffset{} : com_offset(arms);

  PendulumState x;
  x.theta = s.initial.theta;
  x.phi = s.initial.phi;
  x.psi = s.initial.psi;
  double theta_ref = s.initial.theta_ref;

  CommandSetpoint cmd;
  cmd.phi_ref = 0.0;
  cmd.psi_ref = 0.0;
  struct Ramp {
    double phi0 = 0.0, psi0 = 0.0, phi1 = 0.0, psi1 = 0.0;
    std::int64_t begin = 0, length = 0;
  } ramp;

  detail::Sensors sensors(s.sensors, p, s.seed);
  WheelTorques torques;

  std::optional<detail::DeskState> desk;
  const auto hand_point = [&]() -> Eigen::Vector3d { return mean_hand_position(arms); };
  if (s.desk) {
    const Eigen::Vector3d h = hand_point();
    desk = detail::DeskState{contact_point_x(p, x, h.x(), h.z()) + s.desk->gap, 0.0};
  }

  RunResult result;
  result.trace.columns = trace_columns(s);
  const std::size_t n_cols = result.trace.columns.size();
  result.trace.rows.reserve(static_cast<std::size_t>(n_steps / log_every + 1));

  std::size_t next_cmd = 0, next_pose = 0;
  std::vector<Disturbance> active;
  const double n_arms = static_cast<double>(arms.arms.size());

  // External horizontal force on the hands from the desk contact.
  const auto desk_force = [&](const PendulumState& st, const detail::DeskState& dk,
                              const Eigen::Vector3d& h) {
    const double depth = contact_point_x(p, st, h.x(), h.z()) - dk.x;
    if (depth <= 0.0) return 0.0;
    const double rate = contact_point_xdot(p, st, h.x(), h.z()) - dk.v;
    return std::max(0.0, s.desk->stiffness * depth + s.desk->damping * rate);
  };

  for (std::int64_t k = 0; k <= n_steps; ++k) {
    const double t = time_of(k);

    // 1. Scheduled events.
    while (next_cmd < s.commands.size() && control_step_of(s.commands[next_cmd].t) == k) {
      const Command& c = s.commands[next_cmd++];
      ramp.phi0 = cmd.phi_ref;
      ramp.psi0 = cmd.psi_ref;
      ramp.phi1 = c.phi_ref;
      ramp.psi1 = c.psi_ref;
      ramp.begin = k;
      ramp.length = steps_of(c.ramp);
      ++cmd_count.applied;
    }
    while (next_pose < s.arm_poses.size() && control_step_of(s.arm_poses[next_pose].t) == k) {
      xi_target = s.arm_poses[next_pose++].xi_ref;
      ++pose_count.applied;
    }
    for (std::size_t i = 0; i < windows.size(); ++i)
      if (k == windows[i].begin && windows[i].end > windows[i].begin) ++dist_count.applied;

    // 2. Control step.
    if (k % ctrl_every == 0) {
      bool moved = false;
      const double max_move = s.arms.rate_limit * tm.control_period;
      for (std::size_t a = 0; a < arms.arms.size(); ++a) {
        auto& q = arms.arms[a].pitch;
        for (std::size_t j = 0; j < q.size(); ++j) {
          const double step = std::clamp(xi_target[a][j] - q[j], -max_move, max_move);
          if (step != 0.0) {
            q[j] += step;
            moved = true;
          }
        }
      }
      if (moved) {
        body = effective_body(p, arms);
        offset = com_offset(arms);
      }
      if (ramp.length > 0 && k < ramp.begin + ramp.length) {
        const double f = static_cast<double>(k - ramp.begin) / static_cast<double>(ramp.length);
        cmd.phi_ref = ramp.phi0 + f * (ramp.phi1 - ramp.phi0);
        cmd.psi_ref = ramp.psi0 + f * (ramp.psi1 - ramp.psi0);
        cmd.phi_rate_ref = (ramp.phi1 - ramp.phi0) / (static_cast<double>(ramp.length) * tm.dt);
      } else {
        cmd.phi_ref = ramp.phi1;
        cmd.psi_ref = ramp.psi1;
        cmd.phi_rate_ref = 0.0;
      }
      cmd.timestamp = t;
      const PendulumState measured = sensors.measure(x);
      const TickOutput out = run_controller_tick(ctl, measured, cmd, theta_ref);
      theta_ref = out.theta_ref;
      torques = out.torques;
      ++ctrl_count.applied;
    }

    // Disturbances active on this step, resolved to fixed application points.
    active.clear();
    const Eigen::Vector3d hand = hand_point();
    for (std::size_t i = 0; i < s.disturbances.size(); ++i) {
      if (k < windows[i].begin || k >= windows[i].end) continue;
      Disturbance d = s.disturbances[i];
      if (d.kind == DisturbanceKind::impulse_force) {
        d.magnitude /= (d.t_end - d.t_start);
        d.kind = DisturbanceKind::constant_force;
      }
      if (d.target == DisturbanceTarget::hands) {
        d.application_forward = hand.x();
        d.application_height = hand.z();
      }
      d.t_start = -std::numeric_limits<double>::infinity();
      d.t_end = std::numeric_limits<double>::infinity();
      active.push_back(d);
    }

    // 3. Log step.
    if (k % log_every == 0) {
      double hand_fx = 0.0;
      for (const auto& d : active)
        if (d.target == DisturbanceTarget::hands) hand_fx += disturbance_force(p, d, x, t);
      double fdesk = 0.0;
      if (desk) {
        fdesk = desk_force(x, *desk, hand);
        hand_fx -= fdesk;
      }
      TraceRow row;
      row.reserve(n_cols);
      row.insert(row.end(), {t, x.theta, x.phi, x.psi, x.theta_dot, x.phi_dot, x.psi_dot, theta_ref,
                             cmd.phi_ref, cmd.psi_ref, x.phi - cmd.phi_ref, x.psi - cmd.psi_ref,
                             torques.left, torques.right, offset.dx, offset.dz, hand_fx, 0.0});
      const std::size_t max_tension_col = row.size() - 1;
      if (desk) row.insert(row.end(), {desk->x, fdesk});
      double max_tension = 0.0;
      for (std::size_t a = 0; a < arms.arms.size(); ++a) {
        const Arm& arm = arms.arms[a];
        for (double q : arm.pitch) row.push_back(q);
        const Eigen::VectorXd tau_g = gravity_compensation(arm, arm.pitch, x.theta, p.g);
        const Eigen::VectorXd tau_ext =
            hand_force_torque(arm, arm.pitch, x.theta, hand_fx / n_arms, 0.0);
        ArmState state;
        state.xi = Eigen::Map<const Eigen::VectorXd>(arm.pitch.data(),
                                                     static_cast<Eigen::Index>(arm.pitch.size()));
        state.xi_ref = state.xi;
        const Eigen::VectorXd tau_ref = reference_torque(s.muscles, state, tau_g - tau_ext);
        Eigen::VectorXd tension;
        try {
          tension = allocate_tensions(s.muscles, tau_ref).t_ref;
        } catch (const InfeasibleError& e) {
          tension = e.best_effort();
          ++report.qp_infeasible;
        }
        for (Eigen::Index m = 0; m < tension.size(); ++m) {
          row.push_back(tension[m]);
          max_tension = std::max(max_tension, tension[m]);
        }
      }
      row[max_tension_col] = max_tension;
      result.trace.rows.push_back(std::move(row));
      ++log_count.applied;
    }

    if (k == n_steps) break;

    // 4. Plant step.
    if (!desk) {
      x = step_nonlinear(p, body, x, torques, active, t, tm.dt);
      continue;
    }
    using Vec8 = Eigen::Matrix<double, 8, 1>;
    const DeskConfig& dc = *s.desk;
    const auto f = [&](const Vec8& X) {
      const PendulumState st = PendulumState::from_vector(X.head<6>());
      const detail::DeskState dk{X[6], X[7]};
      const double fc = desk_force(st, dk, hand);
      std::vector<Disturbance> all = active;
      Disturbance push;
      push.kind = DisturbanceKind::constant_force;
      push.magnitude = fc;
      push.direction = -1.0;
      push.application_forward = hand.x();
      push.application_height = hand.z();
      push.t_start = -std::numeric_limits<double>::infinity();
      push.t_end = std::numeric_limits<double>::infinity();
      all.push_back(push);
      Vec8 out;
      out.head<6>() = state_derivative(p, body, st, torques, all, t);
      const double friction =
          dc.friction * dc.mass * p.g * std::clamp(dk.v / dc.slip_speed, -1.0, 1.0);
      out[6] = dk.v;
      out[7] = (fc - friction) / dc.mass;
      return out;
    };
    Vec8 X;
    X << x.as_vector(), desk->x, desk->v;
    X = rk4_step(X, tm.dt, f);
    if (!X.allFinite()) throw IntegrationError("run_scenario: integration blew up", t + tm.dt);
    x = PendulumState::from_vector(X.head<6>());
    desk->x = X[6];
    desk->v = X[7];
  }

  report.envelopes = evaluate_envelopes(result.trace, s.envelopes);
  report.trace_rows = result.trace.rows.size();
  result.report = std::move(report);
  return result;
}

}  // namespace wipsim
