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

// Builtin experiment scripts. Targets that depend on the models (the
// balancing lean of an arm pose, the wall position in front of the hands)
// are computed from the scenario's own parameters when it is built.

#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "wipsim/arm.hpp"
#include "wipsim/errors.hpp"
#include "wipsim/harness/scenario.hpp"
#include "wipsim/plant.hpp"

namespace wipsim {

// Pitch that puts the combined CoM above the axle for the given arm pose.
inline double static_equilibrium_pitch(const Scenario& s, const std::vector<std::vector<double>>& pose) {
  ArmModel model = s.arm_model();
  for (std::size_t a = 0; a < model.arms.size(); ++a) model.arms[a].pitch = pose[a];
  return effective_body(s.plant, model).equilibrium_pitch();
}

namespace detail {

inline Scenario base_scenario(std::string name, std::string description, double duration) {
  Scenario s;
  s.name = std::move(name);
  s.description = std::move(description);
  s.duration = duration;
  return s;
}

inline Envelope band(std::string name, std::string signal, double t0, double t1, double target,
                     double bound) {
  Envelope e;
  e.name = std::move(name);
  e.kind = EnvelopeKind::band;
  e.signal = std::move(signal);
  e.t0 = t0;
  e.t1 = t1;
  e.target = target;
  e.bound = bound;
  return e;
}

inline std::vector<std::vector<double>> both_arms(const Scenario& s, std::vector<double> q) {
  return std::vector<std::vector<double>>(s.arms.limbs.size(), q);
}

// Starts the scenario with the arms already in `pose` and balanced for it.
inline void start_in_pose(Scenario& s, const std::vector<std::vector<double>>& pose) {
  for (std::size_t a = 0; a < s.arms.limbs.size(); ++a) s.arms.limbs[a].pitch = pose[a];
  const double lean = static_equilibrium_pitch(s, pose);
  s.initial.theta = lean;
  s.initial.theta_ref = lean;
}

// World x of the mean hand position at the initial state.
inline double initial_hand_x(const Scenario& s) {
  const Eigen::Vector3d h = mean_hand_position(s.arm_model());
  PendulumState x;
  x.theta = s.initial.theta;
  x.phi = s.initial.phi;
  return contact_point_x(s.plant, x, h.x(), h.z());
}

}  // namespace detail

// Steps of 3.14 rad in wheel angle and heading, then back.
inline Scenario translate_rotate_scenario() {
  using detail::band;
  Scenario s = detail::base_scenario(
      "translate_rotate", "wheel-angle and heading steps of 3.14 rad, 8 s apart, then return",
      41.0);
  s.commands = {{1.0, 3.14, 0.0, 0.0},
                {9.0, 6.28, 0.0, 0.0},
                {17.0, 6.28, 3.14, 0.0},
                {25.0, 3.14, 3.14, 0.0},
                {33.0, 3.14, 0.0, 0.0}};
  const double bound = 0.05;
  // Settling windows cover the last second before the next command.
  const double last = 1.0 - s.timing.log_period;
  s.envelopes = {band("theta_within_0.05", "theta", 0.0, 41.0, 0.0, bound),
                 band("phi_settled_step1", "phi_err", 8.0, 8.0 + last, 0.0, bound),
                 band("phi_settled_step2", "phi_err", 16.0, 16.0 + last, 0.0, bound),
                 band("phi_held_during_turn", "phi_err", 24.0, 24.0 + last, 0.0, bound),
                 band("psi_settled_turn", "psi_err", 24.0, 24.0 + last, 0.0, bound),
                 band("phi_settled_return", "phi_err", 32.0, 32.0 + last, 0.0, bound),
                 band("psi_settled_return", "psi_err", 40.0, 41.0, 0.0, bound),
                 band("phi_settled_final", "phi_err", 40.0, 41.0, 0.0, bound)};
  return s;
}

// Shoulders pitch forward to horizontal while balancing in place.
inline Scenario arm_raise_scenario() {
  using detail::band;
  Scenario s = detail::base_scenario(
      "arm_raise", "both shoulders pitch to horizontal at t = 2 s; theta_ref adapts", 60.0);
  const auto raised = detail::both_arms(s, {std::numbers::pi / 2.0, 0.0});
  s.arm_poses = {{2.0, raised}};
  const double lean = static_equilibrium_pitch(s, raised);
  const double dz = s.controller.adaptation.dead_zone;
  s.envelopes = {band("theta_ref_unchanged_before_raise", "theta_ref", 0.0, 2.0, 0.0, 0.0),
                 band("phi_offset_within_dead_zone", "phi_err", 55.0, 60.0, 0.0, dz),
                 band("theta_ref_at_static_lean", "theta_ref", 55.0, 60.0, lean,
                      0.1 * std::abs(lean)),
                 band("theta_near_static_lean", "theta", 55.0, 60.0, lean, 0.1 * std::abs(lean))};
  return s;
}

// Pushes a sliding desk with the hands while driving forward.
inline Scenario desk_push_scenario() {
  Scenario s = detail::base_scenario(
      "desk_push", "drive forward 1 m pushing a 15 kg desk on casters with the hands", 32.0);
  const auto reach = detail::both_arms(s, {0.6, 0.9});
  detail::start_in_pose(s, reach);
  s.desk = DeskConfig{};
  s.desk->gap = 0.02;
  const double distance = 1.0;
  s.commands = {{2.0, distance / s.plant.r_w, 0.0, 20.0}};
  Envelope lean;
  lean.name = "theta_ref_leans_into_push";
  lean.kind = EnvelopeKind::delta;
  lean.signal = "theta_ref";
  lean.t0 = 18.0;
  lean.t1 = 22.0;
  lean.baseline_t0 = 0.0;
  lean.baseline_t1 = 2.0;
  lean.lo = 0.005;
  lean.hi = 0.2;
  Envelope moved;
  moved.name = "desk_moved";
  moved.kind = EnvelopeKind::delta;
  moved.signal = "desk_x";
  moved.t0 = 30.0;
  moved.t1 = 32.0;
  moved.baseline_t0 = 0.0;
  moved.baseline_t1 = 0.0;
  moved.lo = 0.8 * distance;
  moved.hi = 1.2 * distance;
  s.envelopes = {lean, moved,
                 detail::band("theta_stays_balanced", "theta", 0.0, 32.0, s.initial.theta, 0.1)};
  return s;
}

// Rectangular push on the body, as from a kick.
inline Scenario kick_scenario() {
  Scenario s = detail::base_scenario(
      "kick", "150 N for 0.05 s at 0.8 m on the body; theta and phi recover in about 4 s", 15.0);
  Disturbance kick;
  kick.kind = DisturbanceKind::impulse_force;
  kick.magnitude = 150.0 * 0.05;
  kick.application_height = 0.8;
  kick.t_start = 1.0;
  kick.t_end = 1.05;
  s.disturbances = {kick};
  const auto settle = [](std::string name, std::string signal) {
    Envelope e;
    e.name = std::move(name);
    e.kind = EnvelopeKind::settle_time;
    e.signal = std::move(signal);
    e.t0 = 1.05;
    e.t1 = 15.0;
    e.fraction = 0.05;
    e.lo = 4.0 * 0.8;
    e.hi = 4.0 * 1.2;
    return e;
  };
  s.envelopes = {settle("theta_settles_in_4s", "theta"), settle("phi_settles_in_4s", "phi"),
                 detail::band("theta_stays_balanced", "theta", 0.0, 15.0, 0.0, 0.3)};
  return s;
}

// Short and long force pulses on the raised hands.
inline Scenario arm_hit_scenario() {
  Scenario s = detail::base_scenario(
      "arm_hit", "short (0.1 s) and long (1 s) pushes on the raised hands", 25.0);
  // Elbows bent so a horizontal push on the hands loads both joints.
  const auto raised = detail::both_arms(s, {std::numbers::pi / 2.0, 0.9});
  detail::start_in_pose(s, raised);
  Disturbance hit;
  hit.kind = DisturbanceKind::constant_force;
  hit.target = DisturbanceTarget::hands;
  hit.direction = 1.0;
  hit.magnitude = 80.0;
  hit.t_start = 2.0;
  hit.t_end = 2.1;
  Disturbance shove = hit;
  shove.magnitude = 25.0;
  shove.t_start = 10.0;
  shove.t_end = 11.0;
  s.disturbances = {hit, shove};
  const double lean = s.initial.theta;
  s.envelopes = {detail::band("theta_stays_balanced", "theta", 0.0, 25.0, lean, 0.3),
                 detail::band("phi_recovers_after_short", "phi_err", 9.0, 10.0, 0.0, 0.1),
                 detail::band("phi_recovers_after_long", "phi_err", 23.0, 25.0, 0.0, 0.1)};
  Envelope spike;
  spike.name = "tension_rises_during_hit";
  spike.kind = EnvelopeKind::peak_ratio;
  spike.signal = "max_tension";
  spike.t0 = 2.0;
  spike.t1 = 2.1;
  spike.baseline_t0 = 0.5;
  spike.baseline_t1 = 1.5;
  spike.lo = 1.2;
  s.envelopes.push_back(spike);
  return s;
}

// A push sends the robot into a wall in front of its hands.
inline Scenario wall_collision_scenario() {
  Scenario s = detail::base_scenario(
      "wall_collision", "a push at t = 2 s drives the raised hands into a wall 5 cm ahead", 20.0);
  const auto bent = detail::both_arms(s, {1.1, 0.9});
  detail::start_in_pose(s, bent);
  Disturbance push;
  push.kind = DisturbanceKind::impulse_force;
  push.magnitude = 220.0 * 0.1;
  push.application_height = 0.8;
  push.t_start = 2.0;
  push.t_end = 2.1;
  Disturbance wall;
  wall.kind = DisturbanceKind::wall_contact;
  wall.target = DisturbanceTarget::hands;
  wall.wall_position = detail::initial_hand_x(s) + 0.05;
  wall.t_start = 0.0;
  wall.t_end = 20.0;
  s.disturbances = {push, wall};
  Envelope spike;
  spike.name = "tension_more_than_doubles";
  spike.kind = EnvelopeKind::peak_ratio;
  spike.signal = "max_tension";
  spike.t0 = 2.0;
  spike.t1 = 8.0;
  spike.baseline_t0 = 0.5;
  spike.baseline_t1 = 1.5;
  spike.lo = 2.0;
  Envelope back = spike;
  back.name = "tension_returns_to_baseline";
  back.kind = EnvelopeKind::return_ratio;
  back.t0 = 16.0;
  back.t1 = 20.0;
  back.bound = 0.2;
  s.envelopes = {spike, back,
                 detail::band("theta_stays_balanced", "theta", 0.0, 20.0, s.initial.theta, 0.3)};
  return s;
}

inline std::vector<Scenario> builtin_scenarios() {
  return {translate_rotate_scenario(), arm_raise_scenario(),  desk_push_scenario(),
          kick_scenario(),             arm_hit_scenario(),    wall_collision_scenario()};
}

inline std::optional<Scenario> find_builtin(const std::string& name) {
  for (auto& s : builtin_scenarios())
    if (s.name == name) return s;
  return std::nullopt;
}

}  // namespace wipsim
