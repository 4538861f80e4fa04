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

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "oracles.hpp"
#include "wipsim/plant.hpp"
#include "wipsim/riccati.hpp"

namespace wipsim {
namespace {

PlantParams desk_nominal() {
  PlantParams p;
  p.m_w = 2.0;
  p.m_b = 20.0;
  p.I_w = 0.02;
  p.I_b = 1.5;
  p.r_w = 0.1;
  p.l = 0.5;
  p.g = 9.81;
  p.I_yaw = 0.8;
  p.track_width = 0.4;
  return p;
}

Arm single_link_arm(double length, double mass, double pitch) {
  Arm arm;
  arm.lateral_offset = 0.2;
  arm.shoulder_height = 0.6;
  arm.links = {{length, mass}};
  arm.pitch = {pitch};
  return arm;
}

TEST(DescriptorModel, SubstitutesParameterGroups) {
  const LinearModel m = descriptor_model(1.0, 0.0, 1.0, 0.0);
  EXPECT_EQ(m.E(2, 2), 2.0);
  EXPECT_EQ(m.E(2, 3), 1.0);
  EXPECT_EQ(m.E(3, 2), 1.0);
  EXPECT_EQ(m.E(3, 3), 1.0);
  EXPECT_EQ(m.A0(2, 0), 0.0);

  const LinearModel n = descriptor_model(1.0, 1.0, 1.0, 5.0);
  EXPECT_EQ(n.E(2, 2), 4.0);
  EXPECT_EQ(n.E(2, 3), 2.0);
  EXPECT_EQ(n.E(3, 2), 2.0);
  EXPECT_EQ(n.E(3, 3), 1.0);
  EXPECT_EQ(n.A0(2, 0), 5.0);
  EXPECT_EQ(n.B0, Eigen::Vector4d(0.0, 0.0, 0.0, 1.0));
}

TEST(DescriptorModel, RejectsSingularBlock) {
  // a c = b^2 makes the block [[4, 2], [2, 1]] singular.
  LinearModel m = descriptor_model(1.0, 1.0, 1.0, 5.0);
  EXPECT_THROW(reduce_descriptor(m), SingularModelError);
  LinearModel ok = descriptor_model(1.0, 0.0, 1.0, 0.0);
  reduce_descriptor(ok);
  EXPECT_TRUE(ok.A.allFinite());
}

TEST(BuildLinearModel, MatchesHandInverseAtDeskNominal) {
  const PlantParams p = desk_nominal();
  Eigen::Matrix4d A;
  Eigen::Vector4d B;
  testing::hand_linear_model(p, A, B);
  const LinearModel m = build_linear_model(p);
  EXPECT_LT(testing::relative_entry_error(m.A, A), 1e-12);
  EXPECT_LT(testing::relative_entry_error(m.B, B), 1e-12);
}

TEST(BuildLinearModel, GravityDestabilizesPitch) {
  testing::Rng rng(11);
  for (int k = 0; k < 100; ++k) EXPECT_GT(build_linear_model(testing::random_plant(rng)).A(2, 0), 0.0);
}

TEST(BuildLinearModel, RejectsInvalidParameters) {
  PlantParams p;
  p.r_w = 0.0;
  EXPECT_THROW(build_linear_model(p), InvalidArgument);
  p = PlantParams{};
  p.I_b = -1.0;
  EXPECT_THROW(build_linear_model(p), InvalidArgument);
}

TEST(LinearizeNumerically, MatchesDescriptorModelOnRandomPlants) {
  testing::Rng rng(2024);
  for (int k = 0; k < 100; ++k) {
    const PlantParams p = testing::random_plant(rng);
    const LinearModel ref = build_linear_model(p);
    const LinearModel num = linearize_numerically(p, ArmModel{});
    EXPECT_LT(testing::relative_entry_error(num.A, ref.A), 1e-6) << "sample " << k;
    EXPECT_LT(testing::relative_entry_error(num.B, ref.B), 1e-6) << "sample " << k;
  }
}

TEST(ComOffset, ArmsDownIsReference) {
  ArmModel model;
  model.trunk_mass = 20.0;
  model.arms = {single_link_arm(0.4, 1.0, 0.0)};
  const ComOffset off = com_offset(model);
  EXPECT_EQ(off.dx, 0.0);
  EXPECT_EQ(off.dz, 0.0);
  EXPECT_EQ(off.d_inertia, 0.0);
}

TEST(ComOffset, LeverRuleForHorizontalArm) {
  ArmModel model;
  model.trunk_mass = 20.0;
  model.arms = {single_link_arm(0.4, 1.0, std::numbers::pi / 2.0)};
  const ComOffset off = com_offset(model);
  EXPECT_NEAR(off.dx, 0.4 / 21.0, 1e-15);
  EXPECT_NEAR(off.dx, 0.01905, 1e-5);
}

TEST(ComOffset, SymmetricAbductionCancelsLaterally) {
  ArmModel model;
  model.trunk_mass = 20.0;
  Arm left = single_link_arm(0.4, 1.0, 0.7);
  Arm right = left;
  right.lateral_offset = -left.lateral_offset;
  model.arms = {left, right};
  const double dx_plain = com_offset(model).dx;
  model.arms[0].abduction = 0.5;
  model.arms[1].abduction = 0.5;
  const ComOffset off = com_offset(model);
  EXPECT_NEAR(off.dy, 0.0, 1e-15);
  EXPECT_NEAR(off.dx, dx_plain, 1e-15);
}

TEST(StepNonlinear, UprightIsAnEquilibrium) {
  const PlantParams p;
  PendulumState s;
  for (int k = 0; k < 1000; ++k) s = step_nonlinear(p, ArmModel{}, s, 0.0, 0.0, nullptr, 1e-3 * k, 1e-3);
  EXPECT_EQ(s, PendulumState{});
}

TEST(StepNonlinear, UprightIsUnstable) {
  const PlantParams p;
  PendulumState s;
  s.theta = 0.01;
  double prev = s.theta;
  for (int k = 0; k < 200; ++k) {
    s = step_nonlinear(p, ArmModel{}, s, 0.0, 0.0, nullptr, 1e-3 * k, 1e-3);
    EXPECT_GT(s.theta, prev) << "step " << k;
    prev = s.theta;
  }
}

// Open-loop run from a lean small enough that |theta| stays within 0.02 rad
// for 1 s, with a held torque sequence. The oracle is the exact
// zero-order-hold discretization of the linear model.
TEST(StepNonlinear, SmallAngleTrajectoryMatchesLinearModel) {
  const PlantParams p;
  const LinearModel lin = build_linear_model(p);
  const double dt = 1e-3;
  Eigen::Matrix<double, 5, 5> aug = Eigen::Matrix<double, 5, 5>::Zero();
  aug.topLeftCorner<4, 4>() = lin.A * dt;
  aug.topRightCorner<4, 1>() = lin.B * dt;
  const Eigen::Matrix<double, 5, 5> phi = aug.exp();
  const Eigen::Matrix4d Ad = phi.topLeftCorner<4, 4>();
  const Eigen::Vector4d Bd = phi.topRightCorner<4, 1>();

  PendulumState s;
  s.theta = 6e-4;
  Eigen::Vector4d x = s.pitch_state();
  double worst = 0.0, max_theta = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double u = 0.02 * std::sin(2.0 * std::numbers::pi * k * dt);
    s = step_nonlinear(p, ArmModel{}, s, 0.5 * u, 0.5 * u, nullptr, k * dt, dt);
    x = Ad * x + Bd * u;
    worst = std::max(worst, (s.pitch_state() - x).cwiseAbs().maxCoeff());
    max_theta = std::max(max_theta, std::abs(s.theta));
  }
  EXPECT_GT(max_theta, 0.005);
  EXPECT_LE(max_theta, 0.02);
  EXPECT_LE(worst, 1e-3);
}

double energy_drift(const PlantParams& p, double dt) {
  const EffectiveBody body = effective_body(p, ArmModel{});
  PendulumState s;
  s.theta = 0.1;
  s.psi_dot = 0.3;
  const double e0 = mechanical_energy(p, body, s);
  const int steps = static_cast<int>(std::lround(0.5 / dt));
  for (int k = 0; k < steps; ++k) s = step_nonlinear(p, body, s, {}, {}, k * dt, dt);
  return std::abs(mechanical_energy(p, body, s) - e0);
}

TEST(StepNonlinear, EnergyConservedToFourthOrder) {
  PlantParams p;
  p.yaw_damping = 0.0;
  const double coarse = energy_drift(p, 1e-3);
  const double fine = energy_drift(p, 1e-4);
  const double e0 = p.m_b * p.g * p.l;
  EXPECT_LT(coarse, 1e-6 * e0);
  // Tenfold step refinement gains four decades, down to round-off.
  EXPECT_LT(fine, std::max(2e-3 * coarse, 1e-11 * e0));
}

TEST(StepNonlinear, DifferentialTorqueOnlyTurns) {
  const PlantParams p;
  PendulumState s;
  for (int k = 0; k < 500; ++k) s = step_nonlinear(p, ArmModel{}, s, -1.0, 1.0, nullptr, k * 1e-3, 1e-3);
  EXPECT_EQ(s.theta, 0.0);
  EXPECT_EQ(s.phi, 0.0);
  EXPECT_EQ(s.theta_dot, 0.0);
  EXPECT_EQ(s.phi_dot, 0.0);
  EXPECT_GT(s.psi, 0.0);
  EXPECT_GT(s.psi_dot, 0.0);
}

TEST(StepNonlinear, Deterministic) {
  const PlantParams p;
  Disturbance kick;
  kick.kind = DisturbanceKind::impulse_force;
  kick.magnitude = 7.5;
  kick.application_height = 0.8;
  kick.t_start = 0.1;
  kick.t_end = 0.15;
  const auto run = [&] {
    PendulumState s;
    s.theta = 0.03;
    std::vector<PendulumState> out;
    for (int k = 0; k < 2000; ++k) {
      s = step_nonlinear(p, ArmModel{}, s, 0.3, -0.1, &kick, k * 1e-3, 1e-3);
      out.push_back(s);
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(StepNonlinear, RejectsBadStep) {
  const PlantParams p;
  EXPECT_THROW(step_nonlinear(p, ArmModel{}, {}, 0.0, 0.0, nullptr, 0.0, 0.0), InvalidArgument);
  PendulumState bad;
  bad.theta = std::nan("");
  EXPECT_THROW(step_nonlinear(p, ArmModel{}, bad, 0.0, 0.0, nullptr, 0.0, 1e-3), IntegrationError);
}

TEST(Disturbance, WallPushesBackOnlyWhenPenetrated) {
  const PlantParams p;
  Disturbance wall;
  wall.kind = DisturbanceKind::wall_contact;
  wall.application_height = 1.0;
  wall.wall_position = 0.05;
  wall.t_end = 10.0;
  PendulumState s;
  EXPECT_EQ(disturbance_force(p, wall, s, 1.0), 0.0);
  s.theta = 0.1;
  const double depth = p.r_w * s.theta + std::sin(s.theta) - 0.05;
  EXPECT_NEAR(disturbance_force(p, wall, s, 1.0), -wall.wall_stiffness * depth, 1e-9);
  EXPECT_EQ(disturbance_force(p, wall, s, 11.0), 0.0);
}

TEST(Disturbance, ImpulseSpreadsOverWindow) {
  const PlantParams p;
  Disturbance kick;
  kick.kind = DisturbanceKind::impulse_force;
  kick.magnitude = 7.5;
  kick.t_start = 1.0;
  kick.t_end = 1.05;
  EXPECT_NEAR(disturbance_force(p, kick, {}, 1.0), 150.0, 1e-9);
  EXPECT_EQ(disturbance_force(p, kick, {}, 1.05), 0.0);
  EXPECT_EQ(disturbance_force(p, kick, {}, 0.999), 0.0);
}

TEST(EffectiveBody, RaisedArmsMoveEquilibriumBackward) {
  PlantParams p;
  ArmModel model;
  model.trunk_mass = p.m_b - 2.0;
  Arm arm = single_link_arm(0.5, 2.0, std::numbers::pi / 2.0);
  model.arms = {arm};
  const ComOffset off = com_offset(model);
  const EffectiveBody body = effective_body(p, model);
  EXPECT_NEAR(body.equilibrium_pitch(), -std::atan2(off.dx, p.l + off.dz), 1e-15);
  EXPECT_LT(body.equilibrium_pitch(), 0.0);
}

}  // namespace
}  // namespace wipsim
