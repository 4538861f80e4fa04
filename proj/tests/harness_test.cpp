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
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wipsim/wipsim.hpp"

namespace wipsim {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("wipsim_harness_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Scenario short_scenario(std::string name, double duration) {
  Scenario s;
  s.name = std::move(name);
  s.duration = duration;
  return s;
}

TEST(ExportTrace, EmptyTraceIsHeaderOnly) {
  Trace t;
  t.columns = {"t", "theta", "phi"};
  const fs::path path = scratch_dir("empty") / "empty.csv";
  export_trace(t, path.string());
  EXPECT_EQ(slurp(path), "t,theta,phi\n");
  const Trace back = read_trace(path.string());
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_TRUE(back.rows.empty());
}

TEST(ExportTrace, ThousandRowsRoundTripExactly) {
  testing::Rng rng(11);
  Trace t;
  t.columns = {"t", "a", "b", "c"};
  for (int k = 0; k < 1000; ++k) {
    const double scale = std::pow(10.0, testing::uniform(rng, -12, 12));
    t.rows.push_back({k * 0.01, testing::uniform(rng, -1, 1) * scale,
                      testing::uniform(rng, -1, 1), k % 7 == 0 ? -0.0 : 1.0 / 3.0});
  }
  t.rows[5][2] = std::numeric_limits<double>::infinity();
  t.rows[6][2] = -std::numeric_limits<double>::infinity();
  const fs::path path = scratch_dir("rows") / "rows.csv";
  export_trace(t, path.string());
  const Trace back = read_trace(path.string());
  ASSERT_EQ(back.columns, t.columns);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < t.columns.size(); ++j)
      ASSERT_EQ(back.rows[i][j], t.rows[i][j]) << "row " << i << " column " << j;
}

TEST(ExportTrace, RejectsRaggedRows) {
  EXPECT_THROW(trace_from_csv("t,a\n0,1\n0.01\n"), InvalidArgument);
  EXPECT_THROW(trace_from_csv(""), InvalidArgument);
}

TEST(ScenarioConfig, BuiltinsRoundTripThroughJson) {
  for (const Scenario& s : builtin_scenarios()) {
    const json doc = to_json(s);
    const Scenario back = scenario_from_json(doc);
    EXPECT_EQ(to_json(back), doc) << s.name;
    EXPECT_NO_THROW(validate_scenario(back)) << s.name;
  }
}

TEST(ScenarioConfig, ShipsTheSixExperiments) {
  std::vector<std::string> names;
  for (const Scenario& s : builtin_scenarios()) names.push_back(s.name);
  EXPECT_EQ(names, (std::vector<std::string>{"translate_rotate", "arm_raise", "desk_push", "kick",
                                             "arm_hit", "wall_collision"}));
  EXPECT_FALSE(find_builtin("nope").has_value());
}

TEST(ScenarioConfig, UnknownFieldNamesItsPath) {
  json doc = to_json(kick_scenario());
  doc["plant"]["nope"] = 1.0;
  try {
    scenario_from_json(doc);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "plant.nope");
  }
}

TEST(ScenarioConfig, WrongTypeNamesItsPath) {
  json doc = to_json(translate_rotate_scenario());
  doc["commands"][1]["t"] = "soon";
  try {
    scenario_from_json(doc);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "commands.1.t");
  }
}

TEST(ScenarioConfig, OverridesReachNestedFields) {
  json doc = to_json(kick_scenario());
  apply_override(doc, "plant.m_b=42.5");
  apply_override(doc, "disturbances.0.magnitude=3");
  apply_override(doc, "name=renamed");
  const Scenario s = scenario_from_json(doc);
  EXPECT_EQ(s.plant.m_b, 42.5);
  EXPECT_EQ(s.disturbances[0].magnitude, 3.0);
  EXPECT_EQ(s.name, "renamed");
}

TEST(ScenarioConfig, OverrideErrorsNameThePath) {
  json doc = to_json(kick_scenario());
  const auto path_of = [&](const std::string& o) {
    try {
      apply_override(doc, o);
    } catch (const ConfigError& e) {
      return e.path();
    }
    return std::string("<no error>");
  };
  EXPECT_EQ(path_of("plant.nope.x=1"), "plant.nope");
  EXPECT_EQ(path_of("disturbances.9.t_start=1"), "disturbances.9");
  EXPECT_EQ(path_of("disturbances.x.t_start=1"), "disturbances.x");
  EXPECT_EQ(path_of("plant.m_b.x=1"), "plant.m_b.x");
  EXPECT_EQ(path_of("=1"), "=1");
}

TEST(ScenarioConfig, InfiniteBoundsUseStrings) {
  Scenario s = kick_scenario();
  s.muscles.t_max.setConstant(std::numeric_limits<double>::infinity());
  const json doc = to_json(s);
  EXPECT_EQ(doc["muscles"]["t_max"][0], "inf");
  EXPECT_TRUE(std::isinf(scenario_from_json(doc).muscles.t_max[0]));
}

TEST(ScenarioConfig, OffGridEventIsRejected) {
  Scenario s = translate_rotate_scenario();
  s.commands[1].t += 0.0005;
  try {
    validate_scenario(s);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "commands.1.t");
  }
}

TEST(ScenarioConfig, UnknownEnvelopeSignalIsRejected) {
  Scenario s = kick_scenario();
  s.envelopes[0].signal = "no_such_signal";
  EXPECT_THROW(validate_scenario(s), ConfigError);
}

TEST(RunScenario, EmptyScenarioStaysAtRest) {
  const RunResult r = run_scenario(short_scenario("empty", 5.0));
  for (const char* name : {"theta", "phi", "psi", "theta_dot", "phi_dot", "psi_dot", "u_l", "u_r",
                           "theta_ref"})
    for (double v : r.trace.column(name)) ASSERT_LE(std::abs(v), 1e-9) << name;
  EXPECT_EQ(r.trace.rows.size(), 501u);
}

TEST(RunScenario, EveryEventAppliedOnceAtItsTime) {
  const Scenario s = translate_rotate_scenario();
  const RunResult r = run_scenario(s);
  const auto& ev = r.report.events;
  for (const auto& [name, count] : ev) EXPECT_EQ(count.applied, count.scheduled) << name;
  EXPECT_EQ(ev.at("commands").scheduled, s.commands.size());

  const std::vector<double> t = r.trace.column("t");
  const std::vector<double> phi_ref = r.trace.column("phi_ref");
  const std::vector<double> psi_ref = r.trace.column("psi_ref");
  for (std::size_t i = 1; i < t.size(); ++i)
    EXPECT_NEAR(t[i] - t[i - 1], s.timing.log_period, 1e-12);
  // Step commands appear in the first row stamped at their time.
  for (const Command& c : s.commands) {
    if (c.ramp != 0.0) continue;
    const auto k = static_cast<std::size_t>(std::llround(c.t / s.timing.log_period));
    ASSERT_LT(k, t.size());
    EXPECT_EQ(t[k], c.t);
    EXPECT_EQ(phi_ref[k], c.phi_ref);
    EXPECT_EQ(psi_ref[k], c.psi_ref);
  }
}

TEST(RunScenario, SameInputGivesIdenticalTrace) {
  Scenario s = kick_scenario();
  s.sensors.theta_noise = 1e-4;
  s.sensors.rate_noise = 1e-3;
  const RunResult a = run_scenario(s);
  const RunResult b = run_scenario(s);
  EXPECT_EQ(trace_to_csv(a.trace), trace_to_csv(b.trace));
  EXPECT_EQ(report_text(a.report), report_text(b.report));
  s.seed += 1;
  EXPECT_NE(trace_to_csv(run_scenario(s).trace), trace_to_csv(a.trace));
}

TEST(RunScenario, ReportMatchesRecomputationFromExportedTrace) {
  const fs::path dir = scratch_dir("recompute");
  for (const Scenario& s : builtin_scenarios()) {
    const RunResult r = run_scenario(s);
    const OutputFiles files = write_outputs(dir, s, r);
    const Trace exported = read_trace(files.trace.string());
    const auto again = evaluate_envelopes(exported, s.envelopes);
    ASSERT_EQ(again.size(), r.report.envelopes.size());
    for (std::size_t i = 0; i < again.size(); ++i) {
      EXPECT_EQ(again[i].passed, r.report.envelopes[i].passed) << s.name << " " << again[i].name;
      EXPECT_EQ(again[i].value, r.report.envelopes[i].value) << s.name << " " << again[i].name;
      EXPECT_EQ(again[i].margin, r.report.envelopes[i].margin) << s.name << " " << again[i].name;
    }
  }
}

Trace ramp_trace() {
  Trace t;
  t.columns = {"t", "x"};
  for (int k = 0; k <= 100; ++k) {
    const double time = 0.1 * k;
    // 1 until t = 2, decays to 3 by t = 6, then flat.
    double x = 1.0;
    if (time > 2.0) x = time < 6.0 ? 1.0 + 0.5 * (time - 2.0) : 3.0;
    t.rows.push_back({time, x});
  }
  return t;
}

TEST(Envelope, BandAndRange) {
  const Trace t = ramp_trace();
  Envelope band{"b", EnvelopeKind::band, "x", 0.0, 10.0};
  band.target = 2.0;
  band.bound = 1.0;
  EXPECT_TRUE(evaluate_envelope(t, band).passed);
  band.bound = 0.99;
  const auto fail = evaluate_envelope(t, band);
  EXPECT_FALSE(fail.passed);
  EXPECT_NEAR(fail.margin, -0.01, 1e-12);
  Envelope range{"r", EnvelopeKind::range, "x", 0.0, 10.0};
  range.lo = 1.0;
  range.hi = 2.5;
  EXPECT_FALSE(evaluate_envelope(t, range).passed);
  range.hi = 3.0;
  EXPECT_TRUE(evaluate_envelope(t, range).passed);
}

TEST(Envelope, SettleTimeAndRatios) {
  const Trace t = ramp_trace();
  Envelope settle{"s", EnvelopeKind::settle_time, "x", 0.0, 10.0};
  settle.target = 3.0;
  settle.fraction = 0.06;
  settle.lo = 0.0;
  settle.hi = 10.0;
  // Peak deviation 2, band 0.12, last sample outside it at t = 5.7.
  EXPECT_NEAR(evaluate_envelope(t, settle).value, 5.8, 1e-12);

  Envelope peak{"p", EnvelopeKind::peak_ratio, "x", 5.0, 10.0};
  peak.baseline_t0 = 0.0;
  peak.baseline_t1 = 1.0;
  peak.lo = 3.0;
  EXPECT_TRUE(evaluate_envelope(t, peak).passed);
  EXPECT_EQ(evaluate_envelope(t, peak).value, 3.0);

  Envelope back{"r", EnvelopeKind::return_ratio, "x", 8.0, 10.0};
  back.baseline_t0 = 0.0;
  back.baseline_t1 = 1.0;
  back.bound = 0.2;
  EXPECT_FALSE(evaluate_envelope(t, back).passed);

  Envelope delta{"d", EnvelopeKind::delta, "x", 8.0, 10.0};
  delta.baseline_t0 = 0.0;
  delta.baseline_t1 = 1.0;
  delta.lo = 1.9;
  delta.hi = 2.1;
  EXPECT_TRUE(evaluate_envelope(t, delta).passed);
}

TEST(Envelope, EmptyWindowFails) {
  Envelope band{"b", EnvelopeKind::band, "x", 20.0, 30.0};
  band.bound = 1e9;
  EXPECT_FALSE(evaluate_envelope(ramp_trace(), band).passed);
}

TEST(RunBatch, ParallelMatchesSerial) {
  std::vector<Scenario> batch;
  for (const char* name : {"kick", "arm_hit", "wall_collision"}) batch.push_back(*find_builtin(name));
  const auto serial = run_batch(batch, 1);
  const auto parallel = run_batch(batch, 3);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(parallel[i].report.scenario, batch[i].name);
    EXPECT_EQ(trace_to_csv(parallel[i].trace), trace_to_csv(serial[i].trace));
    EXPECT_EQ(report_text(parallel[i].report), report_text(serial[i].report));
  }
}

TEST(RunBatch, PropagatesFailures) {
  std::vector<Scenario> batch = {short_scenario("ok", 1.0), short_scenario("bad", 1.0)};
  batch[1].timing.dt = -1.0;
  EXPECT_THROW(run_batch(batch, 2), ConfigError);
}

TEST(LoadScenario, SeedAndOverridesApply) {
  const Scenario s = load_scenario("kick", {"plant.l=0.45", "sensors.theta_noise=0.001"}, 77);
  EXPECT_EQ(s.seed, 77u);
  EXPECT_EQ(s.plant.l, 0.45);
  EXPECT_EQ(s.sensors.theta_noise, 0.001);
  EXPECT_THROW(load_scenario("kick", {"duration=3"}, std::nullopt), ConfigError);
  EXPECT_THROW(load_scenario("/no/such/file.json", {}, std::nullopt), ConfigError);
}

}  // namespace
}  // namespace wipsim
