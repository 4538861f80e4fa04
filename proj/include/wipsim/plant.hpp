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

// Planar two-wheel inverted pendulum with a yaw degree of freedom.
//
// Generalized coordinates are the body pitch theta (forward lean positive)
// and the mean wheel rotation phi measured relative to the body, so the
// absolute wheel angle is theta + phi and the axle travels r_w (theta + phi).
// The motor torque acts between body and wheels and therefore only enters
// the phi equation. Heading psi is driven by the differential torque.
//
// Linearized about upright this gives the descriptor form
//   E xdot = A0 x + B0 u,   x = [theta, phi, theta_dot, phi_dot]
// with the parameter groups a, b, c, d returned by PlantParams.

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "wipsim/arm.hpp"
#include "wipsim/errors.hpp"

namespace wipsim {

struct PlantParams {
  double m_w = 4.0;            // wheel pair mass [kg]
  double m_b = 40.0;           // body mass including arms [kg]
  double I_w = 0.08;           // wheel pair spin inertia [kg m^2]
  double I_b = 12.0;           // body pitch inertia about its CoM [kg m^2]
  double r_w = 0.1;            // wheel radius [m]
  double l = 0.5;              // axle to body CoM [m]
  double g = 9.81;             // [m/s^2]
  double track_width = 0.5;    // wheel separation [m]
  double I_yaw = 2.0;          // body yaw inertia [kg m^2]
  double yaw_damping = 8.0;    // tire scrub [N m s/rad]

  double a() const { return (m_b + m_w) * r_w * r_w + I_w; }
  double b() const { return m_b * r_w * l; }
  double c() const { return m_b * l * l + I_b; }
  double d() const { return m_b * g * l; }

  // Yaw inertia seen by the differential torque, including the wheels.
  double yaw_inertia() const {
    const double half = 0.5 * track_width;
    return I_yaw + m_w * half * half + I_w * half * half / (r_w * r_w);
  }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw InvalidArgument(std::string("plant: ") + name + " must be finite and > 0");
    };
    positive(m_w, "m_w");
    positive(m_b, "m_b");
    positive(I_w, "I_w");
    positive(I_b, "I_b");
    positive(r_w, "r_w");
    positive(l, "l");
    positive(g, "g");
    positive(track_width, "track_width");
    positive(I_yaw, "I_yaw");
    if (!(yaw_damping >= 0.0) || !std::isfinite(yaw_damping))
      throw InvalidArgument("plant: yaw_damping must be finite and >= 0");
  }
};

struct PendulumState {
  double theta = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  double theta_dot = 0.0;
  double phi_dot = 0.0;
  double psi_dot = 0.0;

  using Vector = Eigen::Matrix<double, 6, 1>;

  Vector as_vector() const { return {theta, phi, psi, theta_dot, phi_dot, psi_dot}; }
  static PendulumState from_vector(const Vector& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }
  // Pitch/translation part in the linear model ordering.
  Eigen::Vector4d pitch_state() const { return {theta, phi, theta_dot, phi_dot}; }

  bool is_finite() const { return as_vector().allFinite(); }
  bool balanced() const { return std::abs(theta) < 0.5 * std::numbers::pi; }

  friend bool operator==(const PendulumState&, const PendulumState&) = default;
};

struct LinearModel {
  Eigen::Matrix4d E = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d A0 = Eigen::Matrix4d::Zero();
  Eigen::Vector4d B0 = Eigen::Vector4d::Zero();
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::Vector4d B = Eigen::Vector4d::Zero();
};

// Descriptor matrices E, A0, B0 for the parameter groups a, b, c, d. A and B
// are left for reduce_descriptor.
inline LinearModel descriptor_model(double a, double b, double c, double d) {
  LinearModel m;
  m.E.bottomRightCorner<2, 2>() << a + 2.0 * b + c, a + b, a + b, a;
  m.A0(0, 2) = 1.0;
  m.A0(1, 3) = 1.0;
  m.A0(2, 0) = d;
  m.B0(3) = 1.0;
  return m;
}

// Fills A = E^-1 A0 and B = E^-1 B0, refusing an ill-conditioned E.
inline void reduce_descriptor(LinearModel& m, double max_condition = 1e12) {
  const Eigen::Matrix2d block = m.E.bottomRightCorner<2, 2>();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(block);
  const double lo = eig.eigenvalues().cwiseAbs().minCoeff();
  const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(cond <= max_condition))
    throw SingularModelError("build_linear_model: E block is singular (condition " +
                                 std::to_string(cond) + ")",
                             cond);
  const Eigen::PartialPivLU<Eigen::Matrix4d> lu(m.E);
  m.A = lu.solve(m.A0);
  m.B = lu.solve(m.B0);
}

// Descriptor-form linearization about upright.
inline LinearModel build_linear_model(const PlantParams& p, double max_condition = 1e12) {
  p.validate();
  LinearModel m = descriptor_model(p.a(), p.b(), p.c(), p.d());
  reduce_descriptor(m, max_condition);
  return m;
}

enum class DisturbanceKind { impulse_force, constant_force, wall_contact };

// Where a disturbance acts. The plant only sees the body-frame point; the
// scenario runner resolves `hands` to the current hand position and also
// loads the arm joints with the force.
enum class DisturbanceTarget { body, hands };

struct Disturbance {
  DisturbanceKind kind = DisturbanceKind::constant_force;
  double magnitude = 0.0;            // [N], or [N s] for impulse_force
  double application_height = 0.0;   // body-frame z of the contact point [m]
  double application_forward = 0.0; // body-frame x of the contact point [m]
  double direction = 1.0;            // +1 pushes forward / wall in front
  double t_start = 0.0;              // [s]
  double t_end = 0.0;                // [s]
  double wall_position = 0.0;        // world x of the wall [m]
  double wall_stiffness = 5000.0;    // [N/m]
  double wall_damping = 100.0;       // [N s/m]
  DisturbanceTarget target = DisturbanceTarget::body;

  void validate() const {
    if (!(t_end >= t_start)) throw InvalidArgument("disturbance: window must satisfy t_start <= t_end");
    if (!(wall_stiffness >= 0.0) || !(wall_damping >= 0.0))
      throw InvalidArgument("disturbance: wall stiffness and damping must be >= 0");
    if (direction != 1.0 && direction != -1.0)
      throw InvalidArgument("disturbance: direction must be +1 or -1");
    if (kind == DisturbanceKind::impulse_force && !(t_end > t_start))
      throw InvalidArgument("disturbance: impulse needs a non-empty window");
  }

  bool active(double t) const {
    if (kind == DisturbanceKind::wall_contact) return t >= t_start && t <= t_end;
    return t >= t_start && t < t_end;
  }
};

// Body parameters after the arms have moved the combined CoM.
struct EffectiveBody {
  double l = 0.0;        // axle to combined CoM [m]
  double lean = 0.0;     // angle of the CoM off the body axis, forward positive
  double inertia = 0.0;  // pitch inertia about the combined CoM

  // Pitch at which the CoM sits straight above the axle.
  double equilibrium_pitch() const { return -lean; }
};

inline EffectiveBody effective_body(const PlantParams& p, const ComOffset& off) {
  const double lx = off.dx;
  const double lz = p.l + off.dz;
  EffectiveBody body;
  body.l = std::hypot(lx, lz);
  body.lean = std::atan2(lx, lz);
  body.inertia = p.I_b + p.m_b * p.l * p.l + off.d_inertia - p.m_b * body.l * body.l;
  if (!(body.inertia > 0.0) || !(body.l > 0.0))
    throw InvalidArgument("plant: arm pose leaves a non-physical body inertia");
  return body;
}

inline EffectiveBody effective_body(const PlantParams& p, const ArmModel& arm) {
  return effective_body(p, arm.arms.empty() ? ComOffset{} : com_offset(arm));
}

// World x of a body-frame point and its rate.
inline double contact_point_x(const PlantParams& p, const PendulumState& s, double forward,
                              double height) {
  return p.r_w * (s.theta + s.phi) + forward * std::cos(s.theta) + height * std::sin(s.theta);
}

inline double contact_point_xdot(const PlantParams& p, const PendulumState& s, double forward,
                                 double height) {
  return p.r_w * (s.theta_dot + s.phi_dot) +
         (-forward * std::sin(s.theta) + height * std::cos(s.theta)) * s.theta_dot;
}

// Horizontal force of a disturbance on the robot. Pulses use the window at
// `t` (the step start); wall contact depends on the state.
inline double disturbance_force(const PlantParams& p, const Disturbance& d, const PendulumState& s,
                                double t) {
  if (!d.active(t)) return 0.0;
  switch (d.kind) {
    case DisturbanceKind::constant_force:
      return d.direction * d.magnitude;
    case DisturbanceKind::impulse_force:
      return d.direction * d.magnitude / (d.t_end - d.t_start);
    case DisturbanceKind::wall_contact: {
      const double x = contact_point_x(p, s, d.application_forward, d.application_height);
      const double depth = d.direction * (x - d.wall_position);
      if (depth <= 0.0) return 0.0;
      const double rate =
          d.direction * contact_point_xdot(p, s, d.application_forward, d.application_height);
      const double push = std::max(0.0, d.wall_stiffness * depth + d.wall_damping * rate);
      return -d.direction * push;
    }
  }
  return 0.0;
}

// Generalized forces on (theta, phi) of a horizontal force at a body point.
inline Eigen::Vector2d generalized_force(const PlantParams& p, const PendulumState& s, double fx,
                                         double forward, double height) {
  return {fx * (p.r_w - forward * std::sin(s.theta) + height * std::cos(s.theta)), fx * p.r_w};
}

struct WheelTorques {
  double left = 0.0;   // [N m]
  double right = 0.0;  // [N m]
  double total() const { return left + right; }
  double differential() const { return right - left; }
};

// Mass matrix of the (theta, phi) subsystem.
inline Eigen::Matrix2d mass_matrix(const PlantParams& p, const EffectiveBody& body, double theta) {
  const double a = p.a();
  const double b = p.m_b * p.r_w * body.l;
  const double c = p.m_b * body.l * body.l + body.inertia;
  const double cg = std::cos(theta + body.lean);
  Eigen::Matrix2d m;
  m << a + 2.0 * b * cg + c, a + b * cg, a + b * cg, a;
  return m;
}

// Time derivative of the full state under the nonlinear dynamics.
inline PendulumState::Vector state_derivative(const PlantParams& p, const EffectiveBody& body,
                                              const PendulumState& s, WheelTorques u,
                                              std::span<const Disturbance> disturbances, double t) {
  const double gamma = s.theta + body.lean;
  const double sg = std::sin(gamma);
  const double b = p.m_b * p.r_w * body.l;
  const double d = p.m_b * p.g * body.l;
  const double centripetal = b * sg * s.theta_dot * s.theta_dot;

  Eigen::Vector2d rhs{d * sg + centripetal, u.total() + centripetal};
  for (const auto& dist : disturbances) {
    const double fx = disturbance_force(p, dist, s, t);
    if (fx != 0.0)
      rhs += generalized_force(p, s, fx, dist.application_forward, dist.application_height);
  }
  const Eigen::Vector2d acc = mass_matrix(p, body, s.theta).ldlt().solve(rhs);

  const double yaw_torque = u.differential() * 0.5 * p.track_width / p.r_w;
  const double psi_acc = (yaw_torque - p.yaw_damping * s.psi_dot) / p.yaw_inertia();

  PendulumState::Vector out;
  out << s.theta_dot, s.phi_dot, s.psi_dot, acc[0], acc[1], psi_acc;
  return out;
}

// Classic fixed-step fourth order Runge-Kutta.
template <class Vec, class Deriv>
Vec rk4_step(const Vec& x, double dt, Deriv&& f) {
  const Vec k1 = f(x);
  const Vec k2 = f(Vec(x + 0.5 * dt * k1));
  const Vec k3 = f(Vec(x + 0.5 * dt * k2));
  const Vec k4 = f(Vec(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline PendulumState step_nonlinear(const PlantParams& p, const EffectiveBody& body,
                                    const PendulumState& s, WheelTorques u,
                                    std::span<const Disturbance> disturbances, double t,
                                    double dt) {
  if (!(dt > 0.0 && dt <= 0.01)) throw InvalidArgument("step_nonlinear: dt must lie in (0, 0.01]");
  if (!s.is_finite()) throw IntegrationError("step_nonlinear: non-finite input state", t);
  const auto f = [&](const PendulumState::Vector& x) {
    return state_derivative(p, body, PendulumState::from_vector(x), u, disturbances, t);
  };
  const PendulumState next = PendulumState::from_vector(rk4_step(s.as_vector(), dt, f));
  if (!next.is_finite()) throw IntegrationError("step_nonlinear: integration blew up", t + dt);
  return next;
}

// Advances one step with the arms held at their current pose.
inline PendulumState step_nonlinear(const PlantParams& p, const ArmModel& arm,
                                    const PendulumState& s, double u_left, double u_right,
                                    std::span<const Disturbance> disturbances, double t,
                                    double dt) {
  return step_nonlinear(p, effective_body(p, arm), s, WheelTorques{u_left, u_right},
                        disturbances, t, dt);
}

inline PendulumState step_nonlinear(const PlantParams& p, const ArmModel& arm,
                                    const PendulumState& s, double u_left, double u_right,
                                    const Disturbance* disturbance, double t, double dt) {
  if (disturbance == nullptr)
    return step_nonlinear(p, arm, s, u_left, u_right, std::span<const Disturbance>{}, t, dt);
  return step_nonlinear(p, arm, s, u_left, u_right, std::span(disturbance, 1), t, dt);
}

// Central-difference Jacobian of the pitch dynamics at the balanced pose of
// the given arm configuration. E, A0, B0 are filled from the mass matrix so
// that the descriptor identities hold for this model too.
inline LinearModel linearize_numerically(const PlantParams& p, const ArmModel& arm) {
  p.validate();
  const EffectiveBody body = effective_body(p, arm);
  PendulumState eq;
  eq.theta = body.equilibrium_pitch();

  const auto f = [&](const Eigen::Vector4d& x, double u) -> Eigen::Vector4d {
    PendulumState s = eq;
    s.theta = x[0];
    s.phi = x[1];
    s.theta_dot = x[2];
    s.phi_dot = x[3];
    const auto full =
        state_derivative(p, body, s, WheelTorques{0.5 * u, 0.5 * u}, std::span<const Disturbance>{}, 0.0);
    return {full[0], full[1], full[3], full[4]};
  };

  const Eigen::Vector4d x0 = eq.pitch_state();
  LinearModel m;
  for (int j = 0; j < 4; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x0[j]));
    Eigen::Vector4d xp = x0, xm = x0;
    xp[j] += h;
    xm[j] -= h;
    m.A.col(j) = (f(xp, 0.0) - f(xm, 0.0)) / (2.0 * h);
  }
  const double hu = 1e-3;
  m.B = (f(x0, hu) - f(x0, -hu)) / (2.0 * hu);

  m.E = Eigen::Matrix4d::Identity();
  m.E.bottomRightCorner<2, 2>() = mass_matrix(p, body, eq.theta);
  m.A0 = m.E * m.A;
  m.B0 = m.E * m.B;
  return m;
}

// Kinetic plus gravitational energy, zero potential at axle height.
inline double mechanical_energy(const PlantParams& p, const EffectiveBody& body,
                                const PendulumState& s) {
  const Eigen::Vector2d qd{s.theta_dot, s.phi_dot};
  const double kinetic = 0.5 * qd.dot(mass_matrix(p, body, s.theta) * qd) +
                         0.5 * p.yaw_inertia() * s.psi_dot * s.psi_dot;
  const double potential = p.m_b * p.g * body.l * std::cos(s.theta + body.lean);
  return kinetic + potential;
}

}  // namespace wipsim
