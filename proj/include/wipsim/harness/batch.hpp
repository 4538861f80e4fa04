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

// Batch execution and per-scenario output files. Every worker owns its
// scenario and result; nothing mutable is shared between runs, and each
// scenario writes only its own files.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "wipsim/errors.hpp"
#include "wipsim/harness/config.hpp"
#include "wipsim/harness/envelope.hpp"
#include "wipsim/harness/runner.hpp"
#include "wipsim/harness/scenario.hpp"
#include "wipsim/harness/scenarios.hpp"
#include "wipsim/harness/trace.hpp"

namespace wipsim {

// Runs every scenario on up to `jobs` threads. Results come back in input
// order whatever the scheduling; the first exception is rethrown after all
// workers have stopped.
inline std::vector<RunResult> run_batch(const std::vector<Scenario>& scenarios, unsigned jobs = 1) {
  const std::size_t n = scenarios.size();
  std::vector<std::optional<RunResult>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i] = run_scenario(scenarios[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<RunResult> out;
  out.reserve(n);
  for (auto& r : slots) out.push_back(std::move(*r));
  return out;
}

// The config document for `target`: a builtin scenario name, or else the
// path of a JSON config. Overrides are applied in order, then the seed.
inline nlohmann::json scenario_document(const std::string& target,
                                        const std::vector<std::string>& overrides = {},
                                        std::optional<std::uint64_t> seed = std::nullopt) {
  nlohmann::json doc;
  if (const auto builtin = find_builtin(target))
    doc = to_json(*builtin);
  else if (std::filesystem::is_regular_file(target))
    doc = load_json_file(target);
  else
    throw ConfigError("", "'" + target + "' is neither a builtin scenario nor a config file");
  for (const auto& o : overrides) apply_override(doc, o);
  if (seed) doc["seed"] = *seed;
  return doc;
}

inline Scenario load_scenario(const std::string& target,
                              const std::vector<std::string>& overrides = {},
                              std::optional<std::uint64_t> seed = std::nullopt) {
  return scenario_from_json(scenario_document(target, overrides, seed));
}

struct OutputFiles {
  std::filesystem::path trace;
  std::filesystem::path report;
};

inline std::string report_text(const Report& r) { return report_to_json(r).dump(2) + "\n"; }

// Writes <dir>/<name>.csv (the exported channels) and <dir>/<name>.report.json.
inline OutputFiles write_outputs(const std::filesystem::path& dir, const Scenario& s,
                                 const RunResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  OutputFiles files{dir / (s.name + ".csv"), dir / (s.name + ".report.json")};
  export_trace(result.exported(s), files.trace.string());
  std::ofstream out(files.report, std::ios::binary);
  out << report_text(result.report);
  if (!out) throw Error("cannot write '" + files.report.string() + "'");
  return files;
}

}  // namespace wipsim
