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

// Scenario document: every model, controller and script setting of one
// closed-loop experiment. A scenario is plain data; `run_scenario` in
// runner.hpp executes it.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wipsim/arm.hpp"
#include "wipsim/balance.hpp"
#include "wipsim/errors.hpp"
#include "wipsim/muscle.hpp"
#include "wipsim/plant.hpp"
#include "wipsim/riccati.hpp"

namespace wipsim {

struct Timing {
  double dt = 1e-3;              // plant step [s]
  double control_period = 2e-3;  // [s], a multiple of dt
  double log_period = 1e-2;      // [s], a multiple of dt
};

struct SensorConfig {
  double theta_noise = 0.0;      // std of additive pitch noise [rad]
  double rate_noise = 0.0;       // std of additive pitch-rate and wheel-rate noise [rad/s]
  int encoder_counts = 0;        // counts per wheel revolution; 0 is ideal
};

struct ControllerConfig {
  LqrWeights lqr;
  YawGain yaw;
  AdaptationConfig adaptation;
  double torque_limit = 40.0;  // per wheel [N m]
};

// Arms mounted on the body. The trunk mass is whatever remains of the plant
// body mass after the arm links.
struct ArmsConfig {
  std::vector<Arm> limbs;
  double rate_limit = 1.0;  // joint drive speed [rad/s]
};

inline ArmsConfig default_arms() {
  ArmsConfig cfg;
  for (double side : {1.0, -1.0}) {
    Arm arm;
    arm.lateral_offset = 0.25 * side;
    arm.shoulder_height = 0.9;
    arm.links = {{0.28, 2.0}, {0.25, 1.5}};
    arm.pitch = {0.0, 0.0};
    cfg.limbs.push_back(arm);
  }
  return cfg;
}

struct InitialState {
  double theta = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  double theta_ref = 0.0;
};

// Setpoint change at time t. A positive ramp moves the references linearly
// from their previous values over that many seconds.
struct Command {
  double t = 0.0;
  double phi_ref = 0.0;
  double psi_ref = 0.0;
  double ramp = 0.0;
};

// New joint targets, one vector per arm.
struct ArmPoseEvent {
  double t = 0.0;
  std::vector<std::vector<double>> xi_ref;
};

// Movable desk in front of the hands: a sliding mass with Coulomb friction
// touched through a stiff one-sided contact.
struct DeskConfig {
  double mass = 15.0;          // [kg]
  double friction = 0.05;      // Coulomb coefficient
  double gap = 0.0;            // initial hand-to-desk distance [m]
  double stiffness = 20000.0;  // [N/m]
  double damping = 400.0;      // [N s/m]
  double slip_speed = 1e-3;    // friction regularization speed [m/s]
};

enum class EnvelopeKind { band, range, settle_time, peak_ratio, return_ratio, delta };

// Pass/fail bound on one trace column.
//   band:         max |x - target| <= bound over window
//   range:        lo <= x <= hi over window
//   settle_time:  time from window start until |x - target| stays within
//                 fraction * peak deviation, must lie in [lo, hi]
//   peak_ratio:   max x over window / mean x over baseline >= lo
//   return_ratio: |mean x over window / mean x over baseline - 1| <= bound
//   delta:        mean x over window - mean x over baseline in [lo, hi]
struct Envelope {
  std::string name;
  EnvelopeKind kind = EnvelopeKind::band;
  std::string signal;
  double t0 = 0.0;
  double t1 = 0.0;
  double target = 0.0;
  double bound = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double fraction = 0.05;
  double baseline_t0 = 0.0;
  double baseline_t1 = 0.0;
};

struct Scenario {
  std::string name;
  std::string description;
  double duration = 10.0;
  std::uint64_t seed = 0;
  Timing timing;
  PlantParams plant;
  ControllerConfig controller;
  ArmsConfig arms = default_arms();
  MuscleConfig muscles = default_arm_muscles();
  SensorConfig sensors;
  InitialState initial;
  std::vector<Command> commands;
  std::vector<ArmPoseEvent> arm_poses;
  std::vector<Disturbance> disturbances;
  std::optional<DeskConfig> desk;
  std::vector<Envelope> envelopes;
  std::vector<std::string> channels;  // exported columns, empty for all

  // Arm model at the initial pose.
  ArmModel arm_model() const {
    ArmModel model;
    model.arms = arms.limbs;
    double arm_mass = 0.0;
    for (const auto& arm : arms.limbs) arm_mass += arm.mass();
    model.trunk_mass = plant.m_b - arm_mass;
    return model;
  }
};

inline const char* to_string(EnvelopeKind k) {
  switch (k) {
    case EnvelopeKind::band: return "band";
    case EnvelopeKind::range: return "range";
    case EnvelopeKind::settle_time: return "settle_time";
    case EnvelopeKind::peak_ratio: return "peak_ratio";
    case EnvelopeKind::return_ratio: return "return_ratio";
    case EnvelopeKind::delta: return "delta";
  }
  return "band";
}

inline const char* to_string(DisturbanceKind k) {
  switch (k) {
    case DisturbanceKind::impulse_force: return "impulse_force";
    case DisturbanceKind::constant_force: return "constant_force";
    case DisturbanceKind::wall_contact: return "wall_contact";
  }
  return "constant_force";
}

inline const char* to_string(DisturbanceTarget k) {
  return k == DisturbanceTarget::hands ? "hands" : "body";
}

}  // namespace wipsim
