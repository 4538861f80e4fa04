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

// Point-mass kinematics of the dual arm carried by the pendulum body.
//
// Body frame: origin on the wheel axle, x forward, y to the left, z up
// along the body axis. Each link carries its mass at its distal end. A
// pitch angle of zero hangs the link straight down; positive pitch swings
// it forward. Abduction tilts the whole arm plane outward about x.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wipsim/errors.hpp"

namespace wipsim {

struct ArmLink {
  double length = 0.0;  // [m]
  double mass = 0.0;    // [kg], lumped at the distal end
};

struct Arm {
  double lateral_offset = 0.0;   // shoulder y [m], sign picks the side
  double shoulder_height = 0.0;  // shoulder z above the axle [m]
  double shoulder_forward = 0.0; // shoulder x [m]
  double abduction = 0.0;        // [rad], outward
  std::vector<ArmLink> links;
  std::vector<double> pitch;     // joint angles, one per link [rad]

  std::size_t joints() const { return links.size(); }
  double mass() const {
    double m = 0.0;
    for (const auto& link : links) m += link.mass;
    return m;
  }
};

struct ArmModel {
  double trunk_mass = 0.0;  // body mass excluding the arms [kg]
  std::vector<Arm> arms;

  double total_mass() const {
    double m = trunk_mass;
    for (const auto& arm : arms) m += arm.mass();
    return m;
  }

  std::size_t total_joints() const {
    std::size_t n = 0;
    for (const auto& arm : arms) n += arm.joints();
    return n;
  }

  void validate() const {
    if (!(trunk_mass > 0.0)) throw InvalidArgument("arm model: trunk_mass must be > 0");
    for (std::size_t a = 0; a < arms.size(); ++a) {
      const auto& arm = arms[a];
      const std::string tag = "arm " + std::to_string(a) + ": ";
      if (arm.pitch.size() != arm.links.size())
        throw DimensionMismatch(tag + "pitch has " + std::to_string(arm.pitch.size()) +
                                " entries for " + std::to_string(arm.links.size()) + " links");
      for (const auto& link : arm.links)
        if (!(link.length >= 0.0) || !(link.mass >= 0.0))
          throw InvalidArgument(tag + "link lengths and masses must be non-negative");
      for (double q : arm.pitch)
        if (!std::isfinite(q)) throw InvalidArgument(tag + "non-finite joint angle");
      if (!std::isfinite(arm.abduction)) throw InvalidArgument(tag + "non-finite abduction");
    }
  }

  // Same model with every joint angle and abduction zeroed.
  ArmModel reference_pose() const {
    ArmModel ref = *this;
    for (auto& arm : ref.arms) {
      arm.abduction = 0.0;
      for (auto& q : arm.pitch) q = 0.0;
    }
    return ref;
  }
};

// Link endpoint positions in the body frame, one column per link.
inline Eigen::Matrix3Xd link_points(const Arm& arm) {
  const std::size_t n = arm.joints();
  Eigen::Matrix3Xd pts(3, static_cast<Eigen::Index>(n));
  const double side = arm.lateral_offset < 0.0 ? -1.0 : 1.0;
  const double cb = std::cos(arm.abduction);
  const double sb = std::sin(arm.abduction);
  double u = 0.0, v = 0.0, cum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cum += arm.pitch[i];
    u += arm.links[i].length * std::sin(cum);
    v -= arm.links[i].length * std::cos(cum);
    const auto c = static_cast<Eigen::Index>(i);
    pts(0, c) = arm.shoulder_forward + u;
    pts(1, c) = arm.lateral_offset - side * v * sb;
    pts(2, c) = arm.shoulder_height + v * cb;
  }
  return pts;
}

inline Eigen::Vector3d hand_position(const Arm& arm) {
  if (arm.joints() == 0)
    return {arm.shoulder_forward, arm.lateral_offset, arm.shoulder_height};
  return link_points(arm).col(static_cast<Eigen::Index>(arm.joints() - 1));
}

// Mean hand position over all arms; the shoulder-free model has no hands.
inline Eigen::Vector3d mean_hand_position(const ArmModel& model) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  if (model.arms.empty()) return sum;
  for (const auto& arm : model.arms) sum += hand_position(arm);
  return sum / static_cast<double>(model.arms.size());
}

struct ComOffset {
  double dx = 0.0;         // forward shift of the combined CoM [m]
  double dz = 0.0;         // upward shift [m]
  double dy = 0.0;         // lateral shift [m]
  double d_inertia = 0.0;  // change of pitch inertia about the axle [kg m^2]
};

// Shift of the combined body+arms CoM relative to the arms-down pose.
inline ComOffset com_offset(const ArmModel& model) {
  ComOffset out;
  const double total = model.total_mass();
  if (!(total > 0.0)) return out;
  for (const auto& arm : model.arms) {
    Arm ref = arm;
    ref.abduction = 0.0;
    for (auto& q : ref.pitch) q = 0.0;
    const Eigen::Matrix3Xd now = link_points(arm);
    const Eigen::Matrix3Xd rest = link_points(ref);
    for (Eigen::Index i = 0; i < now.cols(); ++i) {
      const double m = arm.links[static_cast<std::size_t>(i)].mass;
      out.dx += m * (now(0, i) - rest(0, i));
      out.dy += m * (now(1, i) - rest(1, i));
      out.dz += m * (now(2, i) - rest(2, i));
      out.d_inertia += m * (now(0, i) * now(0, i) + now(2, i) * now(2, i) -
                            rest(0, i) * rest(0, i) - rest(2, i) * rest(2, i));
    }
  }
  out.dx /= total;
  out.dy /= total;
  out.dz /= total;
  return out;
}

// Joint torques that cancel gravity on the arm links. `body_pitch` tilts the
// arm plane with the body.
inline Eigen::VectorXd gravity_compensation(const Arm& arm, std::span<const double> pitch,
                                            double body_pitch, double g) {
  const std::size_t n = arm.joints();
  if (pitch.size() != n)
    throw DimensionMismatch("gravity_compensation: expected " + std::to_string(n) +
                            " joint angles, got " + std::to_string(pitch.size()));
  // Horizontal positions of every joint and link end in the world arm plane.
  std::vector<double> x(n + 1, 0.0);
  double cum = body_pitch;
  for (std::size_t i = 0; i < n; ++i) {
    cum += pitch[i];
    x[i + 1] = x[i] + arm.links[i].length * std::sin(cum);
  }
  const double geff = g * std::cos(arm.abduction);
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = j; i < n; ++i) s += arm.links[i].mass * (x[i + 1] - x[j]);
    tau[static_cast<Eigen::Index>(j)] = geff * s;
  }
  return tau;
}

// Generalized joint torques from a world-frame planar force (fx, fz) at
// the hand.
inline Eigen::VectorXd hand_force_torque(const Arm& arm, std::span<const double> pitch,
                                         double body_pitch, double fx, double fz) {
  const std::size_t n = arm.joints();
  if (pitch.size() != n)
    throw DimensionMismatch("hand_force_torque: expected " + std::to_string(n) +
                            " joint angles, got " + std::to_string(pitch.size()));
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  double cum = body_pitch;
  for (std::size_t i = 0; i < n; ++i) {
    cum += pitch[i];
    u[i + 1] = u[i] + arm.links[i].length * std::sin(cum);
    v[i + 1] = v[i] - arm.links[i].length * std::cos(cum);
  }
  const double cb = std::cos(arm.abduction);
  Eigen::VectorXd tau(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const double du = u[n] - u[j];
    const double dv = v[n] - v[j];
    tau[static_cast<Eigen::Index>(j)] = fx * (-dv) + fz * du * cb;
  }
  return tau;
}

}  // namespace wipsim
