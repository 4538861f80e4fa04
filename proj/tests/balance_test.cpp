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
#include <limits>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wipsim/balance.hpp"

namespace wipsim {
namespace {

class BalanceTest : public ::testing::Test {
 protected:
  PlantParams plant;
  LqrGain gain = solve_care(build_linear_model(plant), LqrWeights{});
};

TEST_F(BalanceTest, ZeroErrorGivesZeroTorque) {
  const auto u = wheel_torques(gain, YawGain{}, PendulumState{}, CommandSetpoint{}, 0.0);
  EXPECT_EQ(u.left, 0.0);
  EXPECT_EQ(u.right, 0.0);
}

TEST_F(BalanceTest, YawErrorGivesReversedTorques) {
  PendulumState s;
  s.psi = 0.25;
  CommandSetpoint cmd;
  cmd.psi_ref = 0.75;
  const auto u = wheel_torques(gain, YawGain{2.0}, s, cmd, 0.0);
  EXPECT_DOUBLE_EQ(u.left, -1.0);
  EXPECT_DOUBLE_EQ(u.right, 1.0);
}

TEST_F(BalanceTest, YawNeverChangesTotalTorque) {
  testing::Rng rng(3);
  for (int k = 0; k < 500; ++k) {
    PendulumState s{testing::uniform(rng, -0.2, 0.2), testing::uniform(rng, -5, 5),
                    testing::uniform(rng, -3, 3),     testing::uniform(rng, -1, 1),
                    testing::uniform(rng, -5, 5),     testing::uniform(rng, -1, 1)};
    CommandSetpoint cmd;
    cmd.phi_ref = testing::uniform(rng, -5, 5);
    cmd.psi_ref = testing::uniform(rng, -3, 3);
    const double theta_ref = testing::uniform(rng, -0.2, 0.2);
    const double lqr = control_torque(gain, s, theta_ref, cmd.phi_ref);
    const auto u = wheel_torques(gain, YawGain{testing::uniform(rng, 0, 5)}, s, cmd, theta_ref);
    EXPECT_NEAR(u.total(), lqr, 1e-9 * (1.0 + std::abs(lqr)));
    CommandSetpoint other = cmd;
    other.psi_ref += 1.0;
    EXPECT_NEAR(wheel_torques(gain, YawGain{2.0}, s, other, theta_ref).total(),
                wheel_torques(gain, YawGain{2.0}, s, cmd, theta_ref).total(), 1e-9 * (1.0 + std::abs(lqr)));
  }
}

TEST_F(BalanceTest, TorqueLimitClampsEachWheel) {
  PendulumState s;
  s.theta = 0.2;
  const auto u = wheel_torques(gain, YawGain{}, s, CommandSetpoint{}, 0.0, 40.0);
  EXPECT_EQ(u.left, 40.0);
  EXPECT_EQ(u.right, 40.0);
}

TEST(AdaptThetaRef, DeadZoneLeavesReferenceBitIdentical) {
  AdaptationConfig cfg;
  PendulumState s;
  s.phi = 0.5 * cfg.dead_zone;
  double ref = 0.0123;
  for (int k = 0; k < 1000; ++k) ref = adapt_theta_ref(cfg, ref, s, CommandSetpoint{}, 0.002);
  EXPECT_EQ(ref, 0.0123);
}

TEST(AdaptThetaRef, RateLimitGivesExactStep) {
  AdaptationConfig cfg;
  PendulumState s;
  s.phi = 100.0;
  EXPECT_DOUBLE_EQ(adapt_theta_ref(cfg, 0.0, s, CommandSetpoint{}, 0.002), -1e-4);
  s.phi = -100.0;
  EXPECT_DOUBLE_EQ(adapt_theta_ref(cfg, 0.0, s, CommandSetpoint{}, 0.002), 1e-4);
}

TEST(AdaptThetaRef, StepNeverExceedsRateLimit) {
  testing::Rng rng(5);
  AdaptationConfig cfg;
  cfg.quasi_static_rate = 0.0;
  for (int k = 0; k < 2000; ++k) {
    PendulumState s;
    s.phi = testing::uniform(rng, -20, 20);
    s.phi_dot = testing::uniform(rng, -2, 2);
    CommandSetpoint cmd;
    cmd.phi_ref = testing::uniform(rng, -20, 20);
    const double dt = testing::uniform(rng, 1e-4, 1e-2);
    const double ref = testing::uniform(rng, -cfg.theta_ref_bound, cfg.theta_ref_bound);
    const double next = adapt_theta_ref(cfg, ref, s, cmd, dt);
    // One rounding of theta_ref - step is allowed on top of the bound.
    EXPECT_LE(std::abs(next - ref), cfg.rate_limit * dt + 4.0 * std::numeric_limits<double>::epsilon());
    EXPECT_LE(std::abs(next), cfg.theta_ref_bound);
  }
}

TEST(AdaptThetaRef, GateHoldsWhileWheelsMove) {
  AdaptationConfig cfg;
  PendulumState s;
  s.phi = 1.0;
  s.phi_dot = 2.0 * cfg.quasi_static_rate;
  EXPECT_EQ(adapt_theta_ref(cfg, 0.05, s, CommandSetpoint{}, 0.002), 0.05);
  CommandSetpoint ramp;
  ramp.phi_rate_ref = s.phi_dot;
  EXPECT_LT(adapt_theta_ref(cfg, 0.05, s, ramp, 0.002), 0.05);
}

TEST(AdaptThetaRef, ClampsToBound) {
  AdaptationConfig cfg;
  PendulumState s;
  s.phi = -10.0;
  double ref = cfg.theta_ref_bound - 1e-5;
  for (int k = 0; k < 10; ++k) ref = adapt_theta_ref(cfg, ref, s, CommandSetpoint{}, 0.002);
  EXPECT_EQ(ref, cfg.theta_ref_bound);
}

TEST(AdaptThetaRef, RejectsNonPositiveStep) {
  EXPECT_THROW(adapt_theta_ref(AdaptationConfig{}, 0.0, {}, {}, 0.0), InvalidArgument);
}

TEST_F(BalanceTest, TickAtEquilibriumIsQuiet) {
  BalanceController ctl{gain, {}, {}, 40.0, 0.002};
  const TickOutput out = run_controller_tick(ctl, PendulumState{}, CommandSetpoint{}, 0.01);
  EXPECT_EQ(out.theta_ref, 0.01);
  PendulumState lean;
  lean.theta = 0.01;
  const TickOutput still = run_controller_tick(ctl, lean, CommandSetpoint{}, 0.01);
  EXPECT_EQ(still.torques.left, 0.0);
  EXPECT_EQ(still.torques.right, 0.0);
}

TEST_F(BalanceTest, TickIsPure) {
  BalanceController ctl{gain, {}, {}, 40.0, 0.002};
  PendulumState s{0.02, 0.3, 0.1, -0.05, 0.2, 0.01};
  CommandSetpoint cmd{1.0, 0.5, 3.0, 0.0};
  const TickOutput a = run_controller_tick(ctl, s, cmd, 0.0);
  const TickOutput b = run_controller_tick(ctl, s, cmd, 0.0);
  EXPECT_EQ(a.torques.left, b.torques.left);
  EXPECT_EQ(a.torques.right, b.torques.right);
  EXPECT_EQ(a.theta_ref, b.theta_ref);
}

// Closed loop through the nonlinear plant at the control rate.
struct LoopResult {
  PendulumState final;
  double max_abs_theta = 0.0;
};

LoopResult closed_loop(const PlantParams& p, const BalanceController& ctl,
                       const CommandSetpoint& cmd, double seconds) {
  PendulumState s;
  double theta_ref = 0.0;
  WheelTorques u;
  LoopResult out;
  const double dt = 1e-3;
  const int steps = static_cast<int>(std::lround(seconds / dt));
  for (int k = 0; k < steps; ++k) {
    if (k % 2 == 0) {
      const TickOutput t = run_controller_tick(ctl, s, cmd, theta_ref);
      theta_ref = t.theta_ref;
      u = t.torques;
    }
    s = step_nonlinear(p, ArmModel{}, s, u.left, u.right, nullptr, k * dt, dt);
    out.max_abs_theta = std::max(out.max_abs_theta, std::abs(s.theta));
  }
  out.final = s;
  return out;
}

TEST_F(BalanceTest, TranslationStepSettlesWithinEnvelope) {
  BalanceController ctl{gain, {}, {}, 40.0, 0.002};
  CommandSetpoint cmd;
  cmd.phi_ref = 3.14;
  const LoopResult r = closed_loop(plant, ctl, cmd, 10.0);
  EXPECT_LE(r.max_abs_theta, 0.05);
  EXPECT_LE(std::abs(r.final.phi - 3.14), 0.05);
}

TEST_F(BalanceTest, PositiveYawErrorTurnsLeft) {
  BalanceController ctl{gain, {}, {}, 40.0, 0.002};
  CommandSetpoint cmd;
  cmd.psi_ref = 1.0;
  const LoopResult r = closed_loop(plant, ctl, cmd, 8.0);
  EXPECT_GT(r.final.psi, 0.0);
  EXPECT_NEAR(r.final.psi, 1.0, 0.05);
}

TEST(Odometry, WheelAnglesRoundTripHeading) {
  const PlantParams p;
  PendulumState s;
  s.phi = 2.0;
  s.psi = 0.7;
  const WheelAngles w = wheel_angles(s, p);
  EXPECT_NEAR(0.5 * (w.left + w.right), 2.0, 1e-15);
  EXPECT_NEAR(yaw_from_odometry(w.left, w.right, p), 0.7, 1e-15);
}

}  // namespace
}  // namespace wipsim
