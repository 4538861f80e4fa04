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

// Scenario runner.
//
//   wipsim list
//   wipsim show  <scenario|config.json> [--seed N] [--override key=value]...
//   wipsim run   <scenario|config.json> [--out DIR] [--seed N] [--override key=value]...
//   wipsim check [--out DIR] [--jobs N]
//
// Exit status: 0 when every envelope passes, 1 when one fails, 2 on a
// usage or config error. WIPSIM_OUT_DIR sets the default output directory.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#ifdef WIPSIM_CLI11_SPLIT_HEADERS
#include <CLI/CLI.hpp>
#else
#include "CLI11.hpp"
#endif
#include "wipsim/wipsim.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

std::string default_out_dir() {
  if (const char* env = std::getenv("WIPSIM_OUT_DIR"); env && *env) return env;
  return "wipsim_out";
}

void print_report(const wipsim::Report& r, std::ostream& os) {
  os << r.scenario << "  seed " << r.seed << "  rows " << r.trace_rows << "  "
     << (r.passed() ? "PASS" : "FAIL") << "\n";
  for (const auto& e : r.envelopes) {
    os << "  " << (e.passed ? "ok  " : "FAIL") << "  " << std::left << std::setw(34) << e.name
       << std::right << " " << std::setw(12) << wipsim::to_string(e.kind) << "  value "
       << std::setw(12) << std::setprecision(6) << e.value << "  margin " << std::setw(12)
       << e.margin << "\n";
  }
  for (const auto& [name, c] : r.events) {
    if (c.scheduled != c.applied)
      os << "  FAIL  event count " << name << ": scheduled " << c.scheduled << ", applied "
         << c.applied << "\n";
  }
  if (r.qp_infeasible > 0)
    os << "  note  tension QP infeasible on " << r.qp_infeasible << " rows (best effort logged)\n";
}

int cmd_list() {
  for (const auto& s : wipsim::builtin_scenarios())
    std::cout << std::left << std::setw(18) << s.name << std::right << std::setw(6) << s.duration
              << " s  " << s.description << "\n";
  return kExitPass;
}

int cmd_show(const std::string& target, const std::vector<std::string>& overrides,
             std::optional<std::uint64_t> seed) {
  const auto doc = wipsim::scenario_document(target, overrides, seed);
  wipsim::scenario_from_json(doc);  // validate before printing
  std::cout << doc.dump(2) << "\n";
  return kExitPass;
}

int cmd_run(const std::string& target, const std::string& out_dir,
            const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed) {
  const wipsim::Scenario s = wipsim::load_scenario(target, overrides, seed);
  const wipsim::RunResult result = wipsim::run_scenario(s);
  const auto files = wipsim::write_outputs(out_dir, s, result);
  print_report(result.report, std::cout);
  std::cout << "  trace  " << files.trace.string() << "\n  report " << files.report.string()
            << "\n";
  return result.report.passed() ? kExitPass : kExitFail;
}

int cmd_check(const std::string& out_dir, unsigned jobs) {
  const auto scenarios = wipsim::builtin_scenarios();
  const auto results = wipsim::run_batch(scenarios, jobs);
  std::size_t failed = 0;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    wipsim::write_outputs(out_dir, scenarios[i], results[i]);
    print_report(results[i].report, std::cout);
    if (!results[i].report.passed()) ++failed;
  }
  std::cout << scenarios.size() - failed << "/" << scenarios.size() << " scenarios passed, outputs in "
            << out_dir << "\n";
  return failed == 0 ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wheeled inverted pendulum with tendon-driven arms: scenario runner"};
  app.require_subcommand(1);

  std::string target;
  std::string out_dir = default_out_dir();
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  app.add_subcommand("list", "print the builtin scenarios");

  auto* show = app.add_subcommand("show", "print the resolved config document of a scenario");
  show->add_option("scenario", target, "builtin name or config path")->required();
  show->add_option("--seed", seed, "noise seed");
  show->add_option("--override", overrides, "set a dotted config field, key=value");

  auto* run = app.add_subcommand("run", "run one scenario and write its trace and report");
  run->add_option("scenario", target, "builtin name or config path")->required();
  run->add_option("--out", out_dir, "output directory (default $WIPSIM_OUT_DIR or wipsim_out)");
  run->add_option("--seed", seed, "noise seed");
  run->add_option("--override", overrides, "set a dotted config field, key=value");

  auto* check = app.add_subcommand("check", "run every builtin scenario, nonzero exit on failure");
  check->add_option("--out", out_dir, "output directory (default $WIPSIM_OUT_DIR or wipsim_out)");
  check->add_option("--jobs", jobs, "parallel workers")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (app.got_subcommand("list")) return cmd_list();
    if (app.got_subcommand("show")) return cmd_show(target, overrides, seed);
    if (app.got_subcommand("run")) return cmd_run(target, out_dir, overrides, seed);
    return cmd_check(out_dir, jobs);
  } catch (const wipsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
