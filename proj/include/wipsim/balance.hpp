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

// Locomotion controller: LQR pitch/translation feedback, proportional yaw
// torque superposed with opposite signs on the two wheels, and a slow
// adaptation of the pitch reference that absorbs CoM shifts.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wipsim/errors.hpp"
#include "wipsim/plant.hpp"
#include "wipsim/riccati.hpp"

namespace wipsim {

struct YawGain {
  double k_psi = 1.0;  // [N m/rad]

  void validate() const {
    if (!(k_psi >= 0.0) || !std::isfinite(k_psi)) throw InvalidArgument("yaw: k_psi must be >= 0");
  }
};

struct AdaptationConfig {
  double k_adapt = 0.02;          // [rad/s per rad of wheel error]
  double dead_zone = 0.05;        // on |phi - phi_ref| [rad]
  double rate_limit = 0.05;       // max |d theta_ref/dt| [rad/s]
  double theta_ref_bound = 0.3;   // [rad]
  // Adapt only while |phi_dot - phi_rate_ref| stays below this [rad/s];
  // zero disables the gate.
  double quasi_static_rate = 0.012;

  void validate() const {
    for (double v : {k_adapt, dead_zone, rate_limit, theta_ref_bound, quasi_static_rate})
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidArgument("adaptation: parameters must be finite and >= 0");
    if (!(theta_ref_bound < 0.25 * std::numbers::pi))
      throw InvalidArgument("adaptation: theta_ref_bound must be < pi/4");
  }
};

struct CommandSetpoint {
  double phi_ref = 0.0;       // [rad]
  double psi_ref = 0.0;       // [rad]
  double timestamp = 0.0;     // [s]
  double phi_rate_ref = 0.0;  // feed rate of a ramped phi_ref [rad/s]
};

// Total torque from the LQR, split evenly, then u_l -= k_psi (psi_ref - psi)
// and u_r += k_psi (psi_ref - psi). Each wheel is clamped to torque_limit.
inline WheelTorques wheel_torques(const LqrGain& gain, const YawGain& yaw, const PendulumState& s,
                                  const CommandSetpoint& cmd, double theta_ref,
                                  double torque_limit = std::numeric_limits<double>::infinity()) {
  const double u = control_torque(gain, s, theta_ref, cmd.phi_ref);
  const double yaw_term = yaw.k_psi * (cmd.psi_ref - s.psi);
  WheelTorques out{0.5 * u - yaw_term, 0.5 * u + yaw_term};
  out.left = std::clamp(out.left, -torque_limit, torque_limit);
  out.right = std::clamp(out.right, -torque_limit, torque_limit);
  return out;
}

// One sample of the rate-limited adaptation of theta_ref. The update runs
// against the wheel error so that theta_ref converges to the lean that puts
// the CoM over the axle (with the LQR gain signs of this plant model).
inline double adapt_theta_ref(const AdaptationConfig& cfg, double theta_ref,
                              const PendulumState& s, const CommandSetpoint& cmd, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("adapt_theta_ref: dt must be > 0");
  const double e = s.phi - cmd.phi_ref;
  if (std::abs(e) <= cfg.dead_zone) return theta_ref;
  if (cfg.quasi_static_rate > 0.0 &&
      std::abs(s.phi_dot - cmd.phi_rate_ref) > cfg.quasi_static_rate)
    return theta_ref;
  const double max_step = cfg.rate_limit * dt;
  const double step = std::clamp(cfg.k_adapt * e * dt, -max_step, max_step);
  return std::clamp(theta_ref - step, -cfg.theta_ref_bound, cfg.theta_ref_bound);
}

struct BalanceController {
  LqrGain gain;
  YawGain yaw;
  AdaptationConfig adaptation;
  double torque_limit = 40.0;     // per wheel [N m]
  double control_period = 0.002;  // [s]
};

struct TickOutput {
  WheelTorques torques;
  double theta_ref = 0.0;
  double total_torque = 0.0;  // LQR output before saturation
};

// Adapts theta_ref, then computes the wheel torques with the new value.
inline TickOutput run_controller_tick(const BalanceController& ctl, const PendulumState& s,
                                      const CommandSetpoint& cmd, double theta_ref) {
  TickOutput out;
  out.theta_ref = adapt_theta_ref(ctl.adaptation, theta_ref, s, cmd, ctl.control_period);
  out.total_torque = control_torque(ctl.gain, s, out.theta_ref, cmd.phi_ref);
  out.torques = wheel_torques(ctl.gain, ctl.yaw, s, cmd, out.theta_ref, ctl.torque_limit);
  return out;
}

struct WheelAngles {
  double left = 0.0;
  double right = 0.0;
};

// Individual wheel rotations (relative to the body) implied by the mean
// rotation and heading under rolling without slip.
inline WheelAngles wheel_angles(const PendulumState& s, const PlantParams& p) {
  const double half = 0.5 * s.psi * p.track_width / p.r_w;
  return {s.phi - half, s.phi + half};
}

// Heading from differential wheel odometry.
inline double yaw_from_odometry(double phi_left, double phi_right, const PlantParams& p) {
  return p.r_w * (phi_right - phi_left) / p.track_width;
}

}  // namespace wipsim
